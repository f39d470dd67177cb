//! Command-line front end: `simulate`, `verify`, `fixture`, `experiment`,
//! `bounds` and `report`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 verification
//! counterexample or failed numeric check, 3 capacity exceeded.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::engine::{run_brw_construction, run_direct, RunConfig, DEFAULT_MAX_BYTES};
use crate::error::{Error, Result};
use crate::events::{evaluate_events, EventParams};
use crate::experiments::bounds::{gantert_identity_check, truncated_sum_bound_check, BoundVerdict, TruncatedSumParams};
use crate::experiments::{
    read_summary, run_replicates, summarize, write_records, write_summary, ExperimentConfig, SummaryRow, HIST_WIDTH,
};
use crate::genealogy::sample_uniform;
use crate::schedule::{schedule_from_eta, ConstantSchedule};
use crate::tails::{epsilon_schedule, time_scale, Family, TailLaw};
use crate::trajectory::Trajectory;
use crate::verify::fixtures::{build_fixture, FixtureKind, FixtureRequest};
use crate::verify::{verify_trajectory, SizeMode, Status};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NBRW_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COUNTEREXAMPLE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

/// Exit code of a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Capacity(_) => EXIT_CAPACITY,
        _ => EXIT_USAGE,
    }
}

#[derive(Parser, Debug)]
#[command(name = "nbrw", version, about = "N-particle branching random walk with heavy-tailed jumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one trajectory and write it to disk.
    Simulate(SimulateArgs),
    /// Evaluate events and run every checker on a trajectory file.
    Verify(VerifyArgs),
    /// Build a synthetic trajectory realizing a hypothesis set.
    Fixture(FixtureArgs),
    /// Run a replicate experiment from a config file.
    Experiment(ExperimentArgs),
    /// Numeric checks of the moment identity and the truncated-sum bound.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Turn summary CSVs into per-figure plot data.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum EngineChoice {
    Direct,
    Brw,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum SizeModeArg {
    Realized,
    Literal,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long, default_value = "pareto")]
    law: Family,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    /// Horizon; defaults to `t-mult · ℓ_N`.
    #[arg(long, conflicts_with = "t_mult")]
    t: Option<u32>,
    #[arg(long)]
    t_mult: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(long, value_enum, default_value = "direct")]
    engine: EngineChoice,
    /// Output file (`.bin` for the binary format); defaults to the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the event report, which needs `t > 4ℓ_N`.
    #[arg(long)]
    events: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_BYTES)]
    max_bytes: u64,
}

#[derive(Args, Debug, Serialize)]
struct ScheduleArgs {
    /// `relaxed`, or a JSON file holding a constant schedule.
    #[arg(long, conflicts_with = "eta")]
    schedule: Option<String>,
    /// Derive every constant from `η`, or with `--rho` use the probe schedule.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, requires = "eta")]
    rho: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    traj: PathBuf,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Observation time; defaults to the trajectory end.
    #[arg(long)]
    t: Option<u32>,
    /// Explicit sample ranks (0-based), comma separated.
    #[arg(long, value_delimiter = ',')]
    sample: Option<Vec<usize>>,
    /// Size of the uniform sample when `--sample` is absent.
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "realized")]
    size_mode: SizeModeArg,
    /// Write the full report as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FixtureArgs {
    #[arg(long)]
    kind: FixtureKind,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    t: Option<u32>,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ExperimentArgs {
    /// `key = value` or JSON config.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
enum BoundsCommand {
    /// Moment identity for a truncated variable.
    Identity {
        #[arg(long, default_value = "pareto")]
        law: Family,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long)]
        v: f64,
        #[arg(long)]
        k1: f64,
        #[arg(long)]
        k2: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Allowed `|LHS − RHS|`.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Exponential-Markov bound on truncated sums.
    Truncated {
        #[arg(long, default_value = "pareto")]
        law: Family,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        q: Option<f64>,
    },
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    /// Summary CSVs written by `experiment`.
    #[arg(long, required = true, num_args = 1..)]
    summary: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Record of one command that wrote files, appended to `manifest.jsonl`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical JSON of the command's arguments or config.
    pub config_digest: String,
    pub seed: Option<u64>,
    pub code_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
}

/// Hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn out_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

struct ManifestDraft {
    command: &'static str,
    config_digest: String,
    seed: Option<u64>,
    started: f64,
}

impl ManifestDraft {
    fn new(command: &'static str, canonical: &impl Serialize, seed: Option<u64>) -> Self {
        let json = serde_json::to_vec(canonical).expect("arguments serialize");
        ManifestDraft { command, config_digest: digest(&json), seed, started: now() }
    }

    fn append(self, dir: &Path, outputs: &[PathBuf]) -> Result<()> {
        let m = RunManifest {
            command: self.command.into(),
            config_digest: self.config_digest,
            seed: self.seed,
            code_version: env!("CARGO_PKG_VERSION").into(),
            started_unix: self.started,
            finished_unix: now(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        let mut f = fs::OpenOptions::new().create(true).append(true).open(dir.join("manifest.jsonl"))?;
        writeln!(f, "{}", serde_json::to_string(&m).expect("manifest serializes"))?;
        Ok(())
    }
}

/// Outcome of a command that ran: the exit code it asks for.
type Outcome = Result<i32>;

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a, out),
        Command::Verify(a) => verify(&a, out),
        Command::Fixture(a) => fixture(&a, out),
        Command::Experiment(a) => experiment(&a, out),
        Command::Bounds(a) => bounds(&a, out),
        Command::Report(a) => report(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn with_suffix(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Outcome {
    let draft = ManifestDraft::new("simulate", a, Some(a.seed));
    let law = TailLaw::new(a.law, a.alpha)?;
    let ell = time_scale(a.n)?;
    let t = a.t.unwrap_or(a.t_mult.unwrap_or(5) * ell);
    if a.events && t <= 4 * ell {
        return Err(Error::Domain(format!("event flags need t > 4ℓ_N = {}, got t = {t}", 4 * ell)));
    }
    let mut cfg = RunConfig::new(law, a.n, t, a.seed);
    cfg.replicate = a.replicate;
    cfg.max_bytes = a.max_bytes;
    cfg.prepare()?;
    let path = match &a.out {
        Some(p) => p.clone(),
        None => out_dir(None).join(format!("traj_n{}_t{t}_s{}_r{}.jsonl", a.n, a.seed, a.replicate)),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let mut written = Vec::new();
    let mut code = EXIT_OK;
    let main = match a.engine {
        EngineChoice::Direct => {
            let tr = run_direct(&cfg)?;
            tr.save(&path)?;
            written.push(path.clone());
            tr
        }
        EngineChoice::Brw => {
            let tr = run_brw_construction(&cfg)?;
            tr.save(&path)?;
            written.push(path.clone());
            tr
        }
        EngineChoice::Both => {
            let d = run_direct(&cfg)?;
            let b = run_brw_construction(&cfg)?;
            let (pd, pb) = (with_suffix(&path, "direct"), with_suffix(&path, "brw"));
            d.save(&pd)?;
            b.save(&pb)?;
            written.extend([pd, pb]);
            match d.first_difference(&b) {
                None if d.same_process(&b) => writeln!(out, "engines agree on every generation").map_err(io_err)?,
                diff => {
                    writeln!(out, "engines differ (first difference at generation {diff:?})").map_err(io_err)?;
                    code = EXIT_COUNTEREXAMPLE;
                }
            }
            d
        }
    };
    if a.events {
        let sched = ConstantSchedule::probe(a.alpha, 0.5, 0.1)?;
        let sample = sample_uniform(&main, t, 4.min(a.n as usize), a.seed)?;
        let report = evaluate_events(&main, &sched, t, &sample, &EventParams::new(epsilon_schedule(ell).min(ell)))?;
        let ep = with_suffix(&path, "events").with_extension("json");
        fs::write(&ep, serde_json::to_string_pretty(&report).expect("report serializes"))?;
        written.push(ep);
    }
    writeln!(out, "N = {}, t = {t}, ℓ_N = {ell}, a_N = {:.6e}", a.n, main.a()).map_err(io_err)?;
    for p in &written {
        writeln!(out, "wrote {}", p.display()).map_err(io_err)?;
    }
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).map(Path::to_path_buf).unwrap_or_else(|| ".".into());
    draft.append(&dir, &written)?;
    Ok(code)
}

// ---------------------------------------------------------------------------
// verify and fixture
// ---------------------------------------------------------------------------

fn resolve_schedule(s: &ScheduleArgs, alpha: f64) -> Result<ConstantSchedule> {
    match (&s.schedule, s.eta) {
        (Some(name), _) if name == "relaxed" => ConstantSchedule::relaxed(alpha),
        (Some(file), _) => {
            let text = fs::read_to_string(file).map_err(|e| Error::Io(format!("{file}: {e}")))?;
            let sched: ConstantSchedule = serde_json::from_str(&text).map_err(|e| Error::Parse {
                location: format!("{file}: line {}, column {}", e.line(), e.column()),
                message: e.to_string(),
            })?;
            if let Some(v) = sched.chain_violation() {
                eprintln!("note: schedule is descriptive only: {v}");
            }
            Ok(sched)
        }
        (None, Some(eta)) => match s.rho {
            Some(rho) => ConstantSchedule::probe(alpha, eta, rho),
            None => schedule_from_eta(eta, alpha),
        },
        (None, None) => Err(Error::Domain("one of --schedule or --eta is required".into())),
    }
}

fn status_text(v: &crate::verify::ImplicationVerdict) -> String {
    match v.status() {
        Status::Pass if v.non_vacuous() => "pass (non-vacuous)".into(),
        Status::Pass => "pass".into(),
        Status::Fail => "FAIL".into(),
        Status::NotEvaluated => "not evaluated".into(),
    }
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Outcome {
    let traj = Trajectory::load(&a.traj)?;
    let sched = resolve_schedule(&a.schedule, traj.law().alpha)?;
    let t = a.t.unwrap_or(traj.t());
    let sample = match &a.sample {
        Some(s) => s.clone(),
        None => sample_uniform(&traj, t, a.m.min(traj.n()), a.seed)?,
    };
    let ell = traj.scales.ell;
    let params = EventParams::new(epsilon_schedule(ell).min(ell));
    let mode = match a.size_mode {
        SizeModeArg::Realized => SizeMode::Realized,
        SizeModeArg::Literal => SizeMode::Literal,
    };
    let rep = verify_trajectory(&traj, &sched, t, &sample, &params, mode)?;
    writeln!(out, "{:<22} {:<20} {:>9}  note", "check", "status", "instances").map_err(io_err)?;
    let mut bad = 0;
    for v in rep.all() {
        writeln!(out, "{:<22} {:<20} {:>9}  {}", v.name, status_text(v), v.instances, v.note).map_err(io_err)?;
        if let Some(w) = &v.counterexample {
            bad += 1;
            writeln!(out, "  counterexample: {}", serde_json::to_string(w).expect("witness serializes")).map_err(io_err)?;
        }
    }
    let flags: Vec<String> = rep
        .events
        .flags
        .iter()
        .into_iter()
        .map(|(k, f)| format!("{k}={}", f.holds.map_or("undef", |b| if b { "1" } else { "0" })))
        .collect();
    writeln!(out, "T = {}, flags: {}", rep.events.big_t, flags.join(" ")).map_err(io_err)?;
    if let Some(p) = &a.json {
        fs::write(p, serde_json::to_string_pretty(&rep).expect("report serializes"))?;
    }
    Ok(if bad > 0 { EXIT_COUNTEREXAMPLE } else { EXIT_OK })
}

fn fixture(a: &FixtureArgs, out: &mut dyn Write) -> Outcome {
    let draft = ManifestDraft::new("fixture", a, None);
    let mut sched_args = &a.schedule;
    let relaxed = ScheduleArgs { schedule: Some("relaxed".into()), eta: None, rho: None };
    if sched_args.schedule.is_none() && sched_args.eta.is_none() {
        sched_args = &relaxed;
    }
    let sched = resolve_schedule(sched_args, 1.0)?;
    let mut req = FixtureRequest::new(a.kind, sched);
    req.n = a.n;
    req.t = a.t;
    req.m = a.m;
    let f = build_fixture(&req)?;
    let path = a.out.clone().unwrap_or_else(|| out_dir(None).join(format!("fixture_{}.jsonl", a.kind.name())));
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).map(Path::to_path_buf).unwrap_or_else(|| ".".into());
    ensure_dir(&dir)?;
    f.traj.save(&path)?;
    let meta = with_suffix(&path, "fixture").with_extension("json");
    let info = serde_json::json!({
        "kind": a.kind.name(), "t": f.t, "sample": f.sample, "schedule": f.schedule, "T": f.report.big_t, "notes": f.notes,
    });
    fs::write(&meta, serde_json::to_string_pretty(&info).expect("json"))?;
    let sample: Vec<String> = f.sample.iter().map(|s| s.to_string()).collect();
    writeln!(out, "{} fixture: N = {}, t = {}, T = {}", a.kind.name(), f.traj.n(), f.t, f.report.big_t).map_err(io_err)?;
    writeln!(out, "wrote {} and {}", path.display(), meta.display()).map_err(io_err)?;
    writeln!(out, "sample: {}", sample.join(",")).map_err(io_err)?;
    draft.append(&dir, &[path, meta])?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// experiment and bounds
// ---------------------------------------------------------------------------

fn experiment(a: &ExperimentArgs, out: &mut dyn Write) -> Outcome {
    let text = fs::read_to_string(&a.config).map_err(|e| Error::Io(format!("{}: {e}", a.config.display())))?;
    let cfg = ExperimentConfig::parse(&text)?;
    cfg.validate()?;
    let draft = ManifestDraft::new("experiment", &cfg, Some(cfg.seed));
    let dir = out_dir(a.out.as_deref().or(cfg.output.as_deref()));
    ensure_dir(&dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let records = pool.install(|| run_replicates(&cfg))?;
    let rows = summarize(&cfg, &records);
    let rec_path = dir.join("records.jsonl");
    let sum_path = dir.join("summary.csv");
    write_records(std::io::BufWriter::new(fs::File::create(&rec_path)?), &cfg, &records)?;
    write_summary(std::io::BufWriter::new(fs::File::create(&sum_path)?), &rows)?;
    for r in rows.iter().filter(|r| ["mrca_in_window", "star", "l_frac@0.5", "diam_median"].contains(&r.statistic.as_str())) {
        writeln!(out, "N = {:>7}  {:<16} {:.4} ± {:.4}  (n = {})", r.n, r.statistic, r.estimate, r.se, r.count).map_err(io_err)?;
    }
    writeln!(out, "wrote {} and {}", rec_path.display(), sum_path.display()).map_err(io_err)?;
    draft.append(&dir, &[rec_path, sum_path])?;
    Ok(EXIT_OK)
}

fn bounds(a: &BoundsCommand, out: &mut dyn Write) -> Outcome {
    match *a {
        BoundsCommand::Identity { law, alpha, v, k1, k2, samples, seed, tol } => {
            let c = gantert_identity_check(&TailLaw::new(law, alpha)?, v, k1, k2, samples, seed)?;
            writeln!(out, "{}", serde_json::to_string(&c).expect("json")).map_err(io_err)?;
            Ok(if c.abs_diff <= tol && c.mc_z() <= 3.0 { EXIT_OK } else { EXIT_COUNTEREXAMPLE })
        }
        BoundsCommand::Truncated { law, alpha, m, r, lambda, n, samples, seed, q } => {
            let p = TruncatedSumParams { m, r, lambda, n, samples, seed, q };
            let c = truncated_sum_bound_check(&TailLaw::new(law, alpha)?, &p)?;
            writeln!(out, "{}", serde_json::to_string(&c).expect("json")).map_err(io_err)?;
            Ok(if c.verdict == BoundVerdict::Fail { EXIT_COUNTEREXAMPLE } else { EXIT_OK })
        }
    }
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Per-figure tables derived from summary rows.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct FigureTables {
    pub coalescence_hist: Vec<HistRow>,
    pub t_hist: Vec<HistRow>,
    pub l_frac: Vec<CurveRow>,
    pub p_diam: Vec<CurveRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistRow {
    pub n: u64,
    pub bin_lo: f64,
    /// `inf` for the overflow bin.
    pub bin_hi: f64,
    pub hits: u64,
    pub count: u64,
    pub freq: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub n: u64,
    pub r: f64,
    pub estimate: f64,
    pub se: f64,
    pub count: u64,
}

fn parse_bin(stat: &str, family: &str) -> Option<(f64, f64)> {
    let rest = stat.strip_prefix(family)?;
    if rest == "_overflow" {
        return Some((12.0 * HIST_WIDTH, f64::INFINITY));
    }
    let inner = rest.strip_prefix('[')?.strip_suffix(')')?;
    let (lo, hi) = inner.split_once(',')?;
    Some((lo.parse().ok()?, hi.parse().ok()?))
}

/// Split summary rows into the plot tables; rows keep their input order
/// within each `N`, and `N` ascends.
pub fn figure_tables(rows: &[SummaryRow]) -> FigureTables {
    let mut by_n: BTreeMap<u64, Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r);
    }
    let mut t = FigureTables::default();
    for (n, rs) in by_n {
        for r in rs {
            let hist = |(lo, hi): (f64, f64)| HistRow {
                n,
                bin_lo: lo,
                bin_hi: hi,
                hits: r.hits.unwrap_or(0),
                count: r.count,
                freq: r.estimate,
                se: r.se,
            };
            let curve = |x: f64| CurveRow { n, r: x, estimate: r.estimate, se: r.se, count: r.count };
            if let Some(b) = parse_bin(&r.statistic, "mrca_hist") {
                t.coalescence_hist.push(hist(b));
            } else if let Some(b) = parse_bin(&r.statistic, "t_hist") {
                t.t_hist.push(hist(b));
            } else if let Some(x) = r.statistic.strip_prefix("l_frac@").and_then(|s| s.parse().ok()) {
                t.l_frac.push(curve(x));
            } else if let Some(x) = r.statistic.strip_prefix("p_diam_ge@").and_then(|s| s.parse().ok()) {
                t.p_diam.push(curve(x));
            }
        }
    }
    t
}

fn write_table<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    if rows.is_empty() {
        w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

const HIST_HEADER: [&str; 7] = ["n", "bin_lo", "bin_hi", "hits", "count", "freq", "se"];
const CURVE_HEADER: [&str; 5] = ["n", "r", "estimate", "se", "count"];

fn report(a: &ReportArgs, out: &mut dyn Write) -> Outcome {
    let draft = ManifestDraft::new("report", a, None);
    let mut rows = Vec::new();
    for p in &a.summary {
        let f = fs::File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        rows.extend(read_summary(std::io::BufReader::new(f))?);
    }
    let t = figure_tables(&rows);
    let dir = out_dir(a.out.as_deref());
    ensure_dir(&dir)?;
    let files = [
        dir.join("coalescence_hist.csv"),
        dir.join("t_hist.csv"),
        dir.join("l_frac_vs_r.csv"),
        dir.join("p_diam_vs_r.csv"),
    ];
    write_table(&files[0], &HIST_HEADER, &t.coalescence_hist)?;
    write_table(&files[1], &HIST_HEADER, &t.t_hist)?;
    write_table(&files[2], &CURVE_HEADER, &t.l_frac)?;
    write_table(&files[3], &CURVE_HEADER, &t.p_diam)?;
    for f in &files {
        writeln!(out, "wrote {}", f.display()).map_err(io_err)?;
    }
    draft.append(&dir, &files)?;
    Ok(EXIT_OK)
}
