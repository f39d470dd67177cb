//! Acceptance suite: one PASS/FAIL line per criterion, with the numbers behind
//! each verdict. Criteria are reported honestly; the process exits 0 unless
//! `NBRW_ACCEPTANCE_STRICT=1` is set, in which case any FAIL exits 1.
//!
//! Run a subset with `cargo test --test acceptance -- 3 6`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nbrw::engine::{run_brw_construction, run_direct, RunConfig};
use nbrw::events::{EventParams, EventReport};
use nbrw::experiments::bounds::{gantert_identity_check, truncated_sum_bound_check, BoundVerdict, TruncatedSumParams};
use nbrw::experiments::{
    find, read_summary, reduce, rewrite_counts, run_replicate, run_replicates, summarize, ExperimentConfig,
    ReplicateRecord, SummaryRow,
};
use nbrw::rng::{jump_value, mix64, JumpKey};
use nbrw::schedule::ConstantSchedule;
use nbrw::stats::binomial;
use nbrw::tails::{epsilon_schedule, time_scale, Scales, TailLaw};
use nbrw::trajectory::Trajectory;
use nbrw::verify::fixtures::{build_fixture, Fixture, FixtureKind, FixtureRequest};
use nbrw::verify::{
    check_a2_prime_inclusion, check_doubling, check_lemma_a, check_monotonicity, check_path_sum,
    check_prop_b_from_report, check_prop_c_from_report, check_second_rightmost, check_support_lemmas,
    verify_trajectory, ImplicationVerdict, SizeMode, Status, VerificationReport,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |k: u32| filters.is_empty() || filters.iter().any(|f| f == &k.to_string());
    let criteria: [(u32, &str, fn() -> Verdict); 10] = [
        (1, "engine oracle equivalence", c1_engines),
        (2, "scale exactness", c2_scales),
        (3, "sampler law", c3_sampler),
        (4, "deterministic theorems", c4_deterministic),
        (5, "conditional implications", c5_implications),
        (6, "moment identity", c6_identity),
        (7, "truncated-sum bound", c7_truncated_sum),
        (8, "trend suite", c8_trends),
        (9, "rewrite inequality", c9_rewrite),
        (10, "determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (k, name, f) in criteria {
        if !wanted(k) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        failed += !v.pass as u32;
        println!("{} criterion {k} ({name}, {secs:.1}s): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if failed > 0 && std::env::var("NBRW_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// 1-3: engines, scales, sampler.
// ---------------------------------------------------------------------------

fn c1_engines() -> Verdict {
    let start = Instant::now();
    let mut runs = 0;
    for n in [2u64, 4, 8, 16] {
        for seed in 0..200 {
            let cfg = RunConfig::new(TailLaw::pareto(1.0).unwrap(), n, 64, seed);
            let (d, b) = (run_direct(&cfg).unwrap(), run_brw_construction(&cfg).unwrap());
            runs += 1;
            for s in 0..=64u32 {
                let (gd, gb) = (&d.generations[s as usize], &b.generations[s as usize]);
                let same = gd.positions.iter().zip(&gb.positions).all(|(x, y)| x.to_bits() == y.to_bits())
                    && gd.parents == gb.parents;
                if !same {
                    return verdict(false, format!("N = {n}, seed = {seed} differ at generation {s}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(secs < 60.0, format!("{runs} pairs identical in positions and parents, {secs:.1}s (budget 60s)"))
}

fn c2_scales() -> Verdict {
    let mut worst = 0.0f64;
    for alpha in [0.5, 1.0, 2.0] {
        let law = TailLaw::pareto(alpha).unwrap();
        for n in [2u64, 1000, 1 << 20] {
            let s = Scales::new(&law, n).unwrap();
            // ⌈log₂ N⌉ by repeated doubling.
            let mut ell = 0u32;
            while (1u64 << ell) < n {
                ell += 1;
            }
            if s.ell != ell {
                return verdict(false, format!("ℓ_N = {} for N = {n}, expected {ell}", s.ell));
            }
            let a = (2.0 * n as f64 * ell as f64).powf(1.0 / alpha);
            worst = worst.max((s.a - a).abs() / a);
        }
    }
    verdict(worst <= 1e-9, format!("9 cases, ℓ_N exact, max relative error of a_N {worst:.2e}"))
}

fn c3_sampler() -> Verdict {
    let law = TailLaw::pareto(2.0).unwrap();
    let n = 1_000_000u64;
    let xs = [1.0, 2.0, 4.0, 8.0];
    let mut hits = [0u64; 4];
    for k in 0..n {
        let key = JumpKey { replicate: k, lineage: 1, path: vec![1] };
        let y = jump_value(&key, &law, 17);
        for (h, &x) in hits.iter_mut().zip(&xs) {
            // P(Y ≥ x); the law is continuous so this is the survival.
            *h += (y >= x) as u64;
        }
    }
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, &x) in xs.iter().enumerate() {
        let want = 1.0 / (x * x);
        let (p, _) = binomial(hits[i], n);
        let se = (want * (1.0 - want) / n as f64).sqrt();
        let z = if se == 0.0 { if p == want { 0.0 } else { f64::INFINITY } } else { (p - want).abs() / se };
        ok &= z <= 3.0;
        parts.push(format!("S({x}) = {p:.5} (z = {z:.2})"));
    }
    verdict(ok, parts.join(", "))
}

// ---------------------------------------------------------------------------
// 4-5: deterministic checkers on random trajectories and fixtures.
// ---------------------------------------------------------------------------

struct RandomRun {
    traj: Trajectory,
    t: u32,
    sample: Vec<usize>,
    params: EventParams,
}

fn random_runs() -> Vec<RandomRun> {
    (0..1000u64)
        .map(|i| {
            let h = mix64(i ^ 0x5eed);
            let n = 2 + h % 31;
            let alpha = [0.7, 1.0, 2.0][(i % 3) as usize];
            let ell = time_scale(n).unwrap();
            let t = 4 * ell + 1 + ((h >> 8) % (2 * ell as u64)) as u32;
            let cfg = RunConfig::new(TailLaw::pareto(alpha).unwrap(), n, t, 1000 + i);
            let traj = run_direct(&cfg).unwrap();
            let m = 2.min(n as usize);
            let sample = nbrw::genealogy::sample_uniform(&traj, t, m, i).unwrap();
            RandomRun { traj, t, sample, params: EventParams::new(epsilon_schedule(ell).min(ell)) }
        })
        .collect()
}

fn schedules(alpha: f64) -> [(&'static str, ConstantSchedule); 2] {
    [("relaxed", ConstantSchedule::relaxed(alpha).unwrap()), ("probe", ConstantSchedule::probe(alpha, 0.5, 0.1).unwrap())]
}

/// Verification reports for every random run under both schedules.
fn random_reports() -> Vec<(&'static str, VerificationReport)> {
    let mut out = Vec::new();
    for r in random_runs() {
        for (name, s) in schedules(r.traj.law().alpha) {
            out.push((name, verify_trajectory(&r.traj, &s, r.t, &r.sample, &r.params, SizeMode::Realized).unwrap()));
        }
    }
    out
}

const BASIC: [&str; 4] = ["monotonicity", "descendants_est", "second_rightmost", "path_sum"];

fn c4_deterministic() -> Verdict {
    let start = Instant::now();
    let reports = random_reports();
    let mut bad = Vec::new();
    let mut lemma_a_evaluated = 0;
    for (sched, rep) in &reports {
        for v in rep.basic.iter().filter(|v| BASIC.contains(&v.name.as_str())) {
            if v.status() != Status::Pass {
                bad.push(format!("{} ({sched})", v.name));
            }
        }
        let a = check_lemma_a(&rep.events);
        if a.status() == Status::Fail {
            bad.push(format!("lemma_A ({sched})"));
        }
        lemma_a_evaluated += a.non_vacuous() as u32;
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        bad.is_empty() && secs < 120.0,
        format!(
            "1000 trajectories x 2 schedules, {} violations{}; lemma A evaluated on {lemma_a_evaluated}/{} reports; {secs:.1}s (budget 120s)",
            bad.len(),
            bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default(),
            reports.len()
        ),
    )
}

fn implication_names(rep: &VerificationReport) -> Vec<&ImplicationVerdict> {
    std::iter::once(&rep.prop_b).chain([&rep.prop_c]).chain(rep.support.iter()).collect()
}

fn relaxed() -> ConstantSchedule {
    ConstantSchedule::relaxed(1.0).unwrap()
}

/// Names of the verdicts each fixture is built to make non-vacuous.
fn targets(kind: FixtureKind) -> &'static [&'static str] {
    match kind {
        FixtureKind::PropB => &["prop_B"],
        FixtureKind::PropCCase1 | FixtureKind::PropCCase2a => &["prop_C"],
        FixtureKind::GEvent => &["lemma_C3C4", "breakRecordGap_a"],
        FixtureKind::Star => &["A2prime_inclusion"],
        FixtureKind::BigJumpLeftmost => &["bigJumpLeftmost"],
        FixtureKind::NoRecord => &["noRecord_a", "noRecord_b"],
    }
}

fn fixture_line(f: &Fixture) -> Result<String, String> {
    let rep = verify_trajectory(&f.traj, &f.schedule, f.t, &f.sample, &f.params, SizeMode::Realized).map_err(|e| e.to_string())?;
    if let Some(v) = rep.counterexamples().first() {
        return Err(format!("{}: counterexample in {}", f.kind.name(), v.name));
    }
    for name in targets(f.kind) {
        let v = rep.get(name).ok_or(format!("missing verdict {name}"))?;
        if !(v.status() == Status::Pass && v.non_vacuous()) {
            return Err(format!("{}: {name} is {:?} ({})", f.kind.name(), v.status(), v.note));
        }
    }
    Ok(format!("{} (N = {})", f.kind.name(), f.traj.n()))
}

/// Each injected violation must be reported as a counterexample.
fn fault_injection() -> Result<usize, String> {
    let g = build_fixture(&FixtureRequest::new(FixtureKind::GEvent, relaxed())).map_err(|e| e.to_string())?;
    let star = build_fixture(&FixtureRequest::new(FixtureKind::Star, relaxed())).map_err(|e| e.to_string())?;
    let top = g.traj.n() - 1;
    let jump = g.report.big_jumps[0].time as usize;
    let big = g.schedule.c1() * g.traj.a();
    let support = |f: &Fixture, traj: &Trajectory, name: &str| {
        check_support_lemmas(traj, &f.report, &f.sample, &f.params).into_iter().find(|v| v.name == name).unwrap()
    };
    let corrupt = |edit: &dyn Fn(&mut Trajectory)| {
        let mut t = g.traj.clone();
        edit(&mut t);
        t
    };
    let flip = |r: &EventReport, names: &[(&str, bool)]| {
        let mut r = r.clone();
        for &(n, v) in names {
            r.flags.get_mut(n).unwrap().holds = Some(v);
        }
        r
    };
    let all_c: Vec<(&str, bool)> =
        ["c2", "c3", "c4", "c5", "c6", "c7", "d1", "d2", "d3", "d4", "d5"].iter().map(|&n| (n, true)).collect();
    let mut c_fail = all_c.clone();
    c_fail.push(("c1", false));
    let cases: Vec<(&str, ImplicationVerdict)> = vec![
        ("monotonicity", check_monotonicity(&corrupt(&|t| t.generations[5].positions[0] = 1e9))),
        ("path_sum", check_path_sum(&corrupt(&|t| t.generations[10].positions[top] += 1.0))),
        (
            "descendants_est",
            check_doubling(&corrupt(&|t| {
                let v = t.generations[jump + 2].positions[top];
                t.generations[jump + 2].positions[top - 5..].iter_mut().for_each(|p| *p = v);
            })),
        ),
        ("second_rightmost", check_second_rightmost(&corrupt(&|t| t.generations[12].positions[top] = 1e12))),
        ("lemma_C4", support(&g, &corrupt(&|t| t.generations[g.t as usize].positions[top] += 2.0 * big), "lemma_C4")),
        ("lemma_C3C4", support(&g, &corrupt(&|t| t.generations[jump + 2].positions[top] += 2.0 * big), "lemma_C3C4")),
        (
            "breakRecordGap_a",
            support(
                &g,
                &corrupt(&|t| t.generations[jump + 1].positions[0] = g.traj.leader(jump as u32) + 2.0 * g.report.big_threshold),
                "breakRecordGap_a",
            ),
        ),
        (
            "breakRecordGap_b",
            support(
                &g,
                &corrupt(&|t| t.generations[jump + 1].positions[top - 1] = t.generations[jump + 1].positions[top]),
                "breakRecordGap_b",
            ),
        ),
        ("lemma_A", check_lemma_a(&flip(&g.report, &[("b1", true), ("b2", true), ("a3", false)]))),
        ("prop_B", check_prop_b_from_report(&flip(&g.report, &[("c1", true), ("b1", false)]), g.traj.n(), SizeMode::Realized)),
        ("prop_C", check_prop_c_from_report(&flip(&g.report, &c_fail))),
        (
            "A2prime_inclusion",
            check_a2_prime_inclusion(&star.traj, &flip(&star.report, &[("a2_prime", false)]), &star.sample, &star.params),
        ),
    ];
    for (name, v) in &cases {
        if v.status() != Status::Fail || v.counterexample.is_none() {
            return Err(format!("injected violation of {name} not caught ({:?}: {})", v.status(), v.note));
        }
    }
    Ok(cases.len())
}

fn c5_implications() -> Verdict {
    // (a) random trajectories.
    let reports = random_reports();
    let mut evaluated: BTreeMap<String, (u32, u32)> = BTreeMap::new();
    let mut bad = Vec::new();
    for (sched, rep) in &reports {
        for v in implication_names(rep) {
            let e = evaluated.entry(v.name.clone()).or_default();
            e.1 += 1;
            e.0 += v.non_vacuous() as u32;
            if v.is_counterexample() {
                bad.push(format!("{} ({sched})", v.name));
            }
        }
    }
    let vacuity: Vec<String> = evaluated
        .iter()
        .map(|(k, (ev, tot))| format!("{k} {:.0}%", 100.0 * (1.0 - *ev as f64 / *tot as f64)))
        .collect();
    // (b) fixtures.
    let mut fixtures = Vec::new();
    for kind in FixtureKind::ALL {
        match build_fixture(&FixtureRequest::new(kind, relaxed())).map_err(|e| e.to_string()).and_then(|f| fixture_line(&f)) {
            Ok(line) => fixtures.push(line),
            Err(e) => bad.push(e),
        }
    }
    let injected = fault_injection();
    if let Err(e) = &injected {
        bad.push(e.clone());
    }
    verdict(
        bad.is_empty(),
        format!(
            "random: {} counterexamples over {} reports; vacuity rates: {}; fixtures non-vacuous: {}; fault injections caught: {}{}",
            bad.len(),
            reports.len(),
            vacuity.join(", "),
            fixtures.join(", "),
            injected.map(|k| k.to_string()).unwrap_or_else(|_| "error".into()),
            bad.first().map(|b| format!("; first problem: {b}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------
// 6-7: numeric bounds.
// ---------------------------------------------------------------------------

fn c6_identity() -> Verdict {
    let law = TailLaw::pareto(2.0).unwrap();
    let mut worst_diff = 0.0f64;
    let mut worst_z = 0.0f64;
    let mut seed = 0;
    for v in [0.5, 1.0, 2.0] {
        for (k1, k2) in [(1.0, 2.0), (1.0, 10.0), (2.0, 5.0)] {
            seed += 1;
            let c = gantert_identity_check(&law, v, k1, k2, 1_000_000, seed).unwrap();
            worst_diff = worst_diff.max(c.abs_diff);
            worst_z = worst_z.max(c.mc_z());
        }
    }
    verdict(
        worst_diff <= 1e-8 && worst_z <= 3.0,
        format!("9 triples, max |LHS - RHS| = {worst_diff:.2e} (tol 1e-8), max Monte-Carlo deviation {worst_z:.2} SE"),
    )
}

fn c7_truncated_sum() -> Verdict {
    let sets = [(1.0, 2, 0.6, 0.1, 1024u64), (2.0, 1, 0.5, 0.2, 4096), (0.7, 4, 0.8, 0.05, 256)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, &(alpha, m, lambda, r, n)) in sets.iter().enumerate() {
        let p = TruncatedSumParams { m, r, lambda, n, samples: 1_000_000, seed: 11 + i as u64, q: None };
        let c = truncated_sum_bound_check(&TailLaw::pareto(alpha).unwrap(), &p).unwrap();
        ok &= c.verdict == BoundVerdict::Pass && c.estimate <= c.bound;
        parts.push(format!(
            "(α={alpha}, m={m}, λ={lambda}, r={r}, N={n}): estimate {:.2e} [upper {:.2e}] vs bound {:.3e}, {:?}",
            c.estimate, c.upper, c.bound, c.verdict
        ));
    }
    verdict(ok, parts.join("; "))
}

// ---------------------------------------------------------------------------
// 8-9: Monte-Carlo trends.
// ---------------------------------------------------------------------------

fn baseline_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/baselines"))
}

fn ladder_config() -> ExperimentConfig {
    ExperimentConfig::parse(&fs::read_to_string(baseline_dir().join("ladder.cfg")).unwrap()).unwrap()
}

/// `xs` non-decreasing with 3 SE slack between consecutive rungs.
fn non_decreasing(xs: &[&SummaryRow]) -> bool {
    xs.windows(2).all(|w| w[1].estimate + 3.0 * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt() >= w[0].estimate)
}

fn c8_trends() -> Verdict {
    let start = Instant::now();
    let cfg = ladder_config();
    let mut records = run_replicates(&cfg).unwrap();
    let top = *cfg.n_list.last().unwrap();
    // Pool 100 further replicates at the top rung for the histogram.
    let extra: Vec<ReplicateRecord> = (cfg.replicates..2 * cfg.replicates)
        .map(|r| {
            let (tr, rep, prof) = run_replicate(&cfg, top, r).unwrap();
            reduce(&cfg, &tr, &rep, &prof)
        })
        .collect();
    let rows = summarize(&cfg, &records);
    records.extend(extra);
    let pooled = summarize(&cfg, &records);
    let base = read_summary(std::io::BufReader::new(fs::File::open(baseline_dir().join("ladder_pilot.csv")).unwrap())).unwrap();
    let ladder = |stat: &str| cfg.n_list.iter().map(|&n| find(&rows, n, stat).unwrap()).collect::<Vec<_>>();
    let at_top = |stat: &str| find(&rows, top, stat).unwrap().estimate;

    let mut parts = Vec::new();
    let mut ok = true;
    let mut check = |label: &str, pass: bool, text: String| {
        ok &= pass;
        parts.push(format!("({label}) {} {text}", if pass { "pass" } else { "FAIL" }));
    };
    let fmt = |rs: &[&SummaryRow]| rs.iter().map(|r| format!("{:.3}±{:.3}", r.estimate, r.se)).collect::<Vec<_>>().join(" → ");

    let w = ladder("mrca_in_window");
    check("i", non_decreasing(&w) && at_top("mrca_in_window") >= 0.5, format!("MRCA in window {}", fmt(&w)));
    let l = ladder("l_frac@0.5");
    check("ii", non_decreasing(&l) && at_top("l_frac@0.5") >= 0.8, format!("L_0.5/N {}", fmt(&l)));
    let s = ladder("star");
    check(
        "iii",
        non_decreasing(&s) && at_top("star") >= 0.5,
        format!("star {} (target ≥ 0.5 at the top rung; ε_Nℓ_N = 1 here, so only a balanced 2-generation merger qualifies)", fmt(&s)),
    );
    let bins = ["t_hist[1.00,1.25)", "t_hist[1.25,1.50)", "t_hist[1.50,1.75)", "t_hist[1.75,2.00)"];
    let counts: Vec<u64> = bins.iter().map(|b| find(&pooled, top, b).unwrap().hits.unwrap()).collect();
    let conditioned = find(&pooled, top, bins[0]).unwrap().count;
    let total = records.iter().filter(|r| r.n == top).count();
    check(
        "iv",
        counts.iter().all(|&c| c > 0) && total >= 200,
        format!("(t−T)/ℓ bins in (1,2) at N = {top}: {counts:?} of {conditioned} with T > 0, {total} pooled replicates"),
    );
    let medians: Vec<f64> = cfg.n_list.iter().map(|&n| find(&rows, n, "diam_median").unwrap().estimate).collect();
    let diam_ok = medians.iter().all(|m| (1e-2..=1e2).contains(m))
        && cfg.n_list.iter().all(|&n| {
            let p: Vec<f64> = [0.05, 0.5, 5.0].iter().map(|r| find(&rows, n, &format!("p_diam_ge@{r}")).unwrap().estimate).collect();
            p[0] > p[1] && p[1] > p[2]
        });
    check("v", diam_ok, format!("median d/a_N {medians:.3?}, P(d ≥ r a_N) strictly decreasing over r ∈ {{0.05, 0.5, 5}}"));

    // Regression against the frozen pilot.
    let mut drift = Vec::new();
    for stat in ["mrca_in_window", "l_frac@0.5", "star"] {
        for &n in &cfg.n_list {
            let (now, then) = (find(&rows, n, stat).unwrap(), find(&base, n, stat).unwrap());
            if (now.estimate - then.estimate).abs() > 3.0 * (now.se.powi(2) + then.se.powi(2)).sqrt() + 1e-12 {
                drift.push(format!("{stat}@{n}"));
            }
        }
    }
    check("baseline", drift.is_empty(), format!("drift from the frozen pilot: {drift:?}"));
    let secs = start.elapsed().as_secs_f64();
    check("runtime", secs < 900.0, format!("{secs:.0}s (budget 900s)"));
    verdict(ok, parts.join("; "))
}

fn c9_rewrite() -> Verdict {
    let cfg = ExperimentConfig { n_list: vec![1 << 12], ..ladder_config() };
    let sched = cfg.event_schedule().unwrap();
    let records = run_replicates(&cfg).unwrap();
    let counts = rewrite_counts(&records, 1 << 12, &sched, cfg.m);
    let v = nbrw::verify::check_lemma_rewrite_bound(&counts);
    let n = counts.replicates as f64;
    let rhs = (2 * counts.a3_fail + counts.a4_fail) as f64 / n + counts.eta;
    verdict(
        v.status() == Status::Pass && v.non_vacuous(),
        format!(
            "N = 4096, {} replicates, η = {}, ν = {}: freq(A2ᶜ) = {:.2} ≤ 2 freq(A3ᶜ) + freq(A4ᶜ) + η = {rhs:.2} (+3 SE), freq(A3ᶜ) = {:.2}, freq(A4ᶜ) = {:.2}{}",
            counts.replicates,
            counts.eta,
            counts.nu,
            counts.a2_fail as f64 / n,
            counts.a3_fail as f64 / n,
            counts.a4_fail as f64 / n,
            if v.note.is_empty() { String::new() } else { format!("; {}", v.note) }
        ),
    )
}

// ---------------------------------------------------------------------------
// 10: determinism through the command-line tool.
// ---------------------------------------------------------------------------

fn c10_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| {
        let o = Command::new(env!("CARGO_BIN_EXE_nbrw")).args(args).current_dir(d).output().unwrap();
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let cfg = "n_list = 256, 2048\nreplicates = 12\nm = 4\nr_grid = 0.05, 0.5, 5\nseed = 3\n";
    fs::write(d.join("c.cfg"), cfg).unwrap();
    let mut same = Vec::new();
    let bytes = |p: &str| fs::read(d.join(p)).unwrap();
    for (tag, jobs) in [("a", "1"), ("b", "4")] {
        run(&["simulate", "--n", "64", "--t-mult", "6", "--seed", "5", "--engine", "both", "--out", &format!("{tag}/t.bin")]);
        run(&["experiment", "--config", "c.cfg", "--jobs", jobs, "--out", tag]);
        run(&["report", "--summary", &format!("{tag}/summary.csv"), "--out", &format!("{tag}/fig")]);
        run(&["verify", "--traj", &format!("{tag}/t.direct.bin"), "--eta", "0.5", "--rho", "0.1", "--json", &format!("{tag}/v.json")]);
        let out = run(&["bounds", "truncated", "--m", "2", "--r", "0.1", "--lambda", "0.6", "--n", "1024", "--samples", "50000"]);
        fs::write(d.join(tag).join("bounds.json"), out).unwrap();
    }
    let files = [
        "t.direct.bin",
        "t.brw.bin",
        "records.jsonl",
        "summary.csv",
        "fig/coalescence_hist.csv",
        "fig/t_hist.csv",
        "fig/l_frac_vs_r.csv",
        "fig/p_diam_vs_r.csv",
        "v.json",
        "bounds.json",
    ];
    for f in files {
        same.push((f, bytes(&format!("a/{f}")) == bytes(&format!("b/{f}"))));
    }
    let differing: Vec<&str> = same.iter().filter(|s| !s.1).map(|s| s.0).collect();
    verdict(
        differing.is_empty(),
        format!("{} outputs compared across two invocations (--jobs 1 vs 4); differing: {differing:?}", files.len()),
    )
}
