//! Fixtures realize their hypothesis sets, the checkers hold on them, and
//! corrupted copies are caught.

use nbrw::engine::run_brw_construction_with;
use nbrw::error::Error;
use nbrw::events::{evaluate_events, EventReport};
use nbrw::schedule::ConstantSchedule;
use nbrw::trajectory::Trajectory;
use nbrw::verify::fixtures::{build_fixture, smallest_n, Fixture, FixtureKind, FixtureRequest};
use nbrw::verify::{
    check_basic, check_doubling, check_lemma_a, check_lemma_rewrite_bound, check_monotonicity, check_path_sum,
    check_prop_b_from_report, check_prop_c_from_report, check_second_rightmost, check_support_lemmas,
    verify_trajectory, ImplicationVerdict, RewriteCounts, SizeMode, Status,
};

fn relaxed() -> ConstantSchedule {
    ConstantSchedule::relaxed(1.0).unwrap()
}

fn fixture(kind: FixtureKind) -> Fixture {
    build_fixture(&FixtureRequest::new(kind, relaxed())).unwrap()
}

fn support(f: &Fixture, traj: &Trajectory, name: &str) -> ImplicationVerdict {
    check_support_lemmas(traj, &f.report, &f.sample, &f.params).into_iter().find(|v| v.name == name).unwrap()
}

const SMALL: [FixtureKind; 5] =
    [FixtureKind::PropB, FixtureKind::GEvent, FixtureKind::Star, FixtureKind::BigJumpLeftmost, FixtureKind::NoRecord];

#[test]
fn small_fixtures_have_no_counterexamples() {
    for kind in SMALL {
        let f = fixture(kind);
        assert_eq!(f.traj.n(), 129, "{kind:?}");
        let v = verify_trajectory(&f.traj, &f.schedule, f.t, &f.sample, &f.params, SizeMode::Realized).unwrap();
        let bad: Vec<_> = v.counterexamples().iter().map(|v| (v.name.clone(), v.counterexample.clone())).collect();
        assert!(bad.is_empty(), "{kind:?}: {bad:?}");
        assert!(v.basic.iter().all(|b| b.status() == Status::Pass));
    }
}

#[test]
fn prop_b_fixture_is_non_vacuous_under_realized_sizes() {
    let f = fixture(FixtureKind::PropB);
    let v = check_prop_b_from_report(&f.report, f.traj.n(), SizeMode::Realized);
    assert_eq!(v.status(), Status::Pass, "{}", v.note);
    assert!(v.non_vacuous());
    let literal = check_prop_b_from_report(&f.report, f.traj.n(), SizeMode::Literal);
    assert_ne!(literal.status(), Status::Fail);
}

#[test]
fn support_fixtures_make_their_lemmas_non_vacuous() {
    let g = fixture(FixtureKind::GEvent);
    assert!(g.report.flags.g.is_true());
    let star = fixture(FixtureKind::Star);
    let v = support(&star, &star.traj, "A2prime_inclusion");
    assert_eq!(v.status(), Status::Pass, "{}", v.note);
    assert!(v.non_vacuous());
    let big = fixture(FixtureKind::BigJumpLeftmost);
    assert!(support(&big, &big.traj, "bigJumpLeftmost").non_vacuous());
    let nr = fixture(FixtureKind::NoRecord);
    assert!(support(&nr, &nr.traj, "noRecord_a").non_vacuous());
    assert!(support(&nr, &nr.traj, "noRecord_b").non_vacuous());
}

#[test]
fn star_sample_of_four_coalesces_at_the_record() {
    let mut req = FixtureRequest::new(FixtureKind::Star, relaxed());
    req.m = 4;
    let f = build_fixture(&req).unwrap();
    let prof = nbrw::genealogy::coalescence_profile(&f.traj, &f.sample, f.t).unwrap();
    assert_eq!(prof.mrca_time, Some(f.report.big_t));
}

#[test]
fn table_replays_through_the_brw_construction() {
    let f = fixture(FixtureKind::BigJumpLeftmost);
    let mut table = f.table.clone();
    let cfg = nbrw::engine::RunConfig::new(nbrw::tails::TailLaw::pareto(1.0).unwrap(), 129, f.t, 0);
    let replay = run_brw_construction_with(&cfg, &mut table).unwrap();
    for s in 0..=f.t {
        assert_eq!(replay.positions(s), f.traj.positions(s));
    }
}

#[test]
fn requests_outside_the_admissible_range_are_refused() {
    let mut req = FixtureRequest::new(FixtureKind::PropCCase1, relaxed());
    req.n = Some(1025);
    assert!(matches!(build_fixture(&req), Err(Error::Infeasible(_))));
    assert_eq!(smallest_n(FixtureKind::PropCCase1, &relaxed()).unwrap(), (1 << 20) + 1);
    let probe = ConstantSchedule::probe(1.0, 0.5, 0.5).unwrap();
    assert!(matches!(build_fixture(&FixtureRequest::new(FixtureKind::PropB, probe)), Err(Error::Infeasible(_))));
    let mut short = FixtureRequest::new(FixtureKind::GEvent, relaxed());
    short.t = Some(32);
    assert!(matches!(build_fixture(&short), Err(Error::Infeasible(_))));
}

// ---------------------------------------------------------------------------
// Fault injection on trajectories.
// ---------------------------------------------------------------------------

fn assert_fails(v: &ImplicationVerdict) {
    assert_eq!(v.status(), Status::Fail, "{} should fail: {}", v.name, v.note);
    assert!(v.counterexample.is_some());
}

#[test]
fn corrupted_order_is_caught() {
    let f = fixture(FixtureKind::GEvent);
    let mut bad = f.traj.clone();
    bad.generations[5].positions[0] = 1.0;
    assert_fails(&check_monotonicity(&bad));
    assert_eq!(check_monotonicity(&f.traj).status(), Status::Pass);
}

#[test]
fn corrupted_position_breaks_the_path_sum() {
    let f = fixture(FixtureKind::GEvent);
    let mut bad = f.traj.clone();
    bad.generations[10].positions[128] += 1.0;
    assert_fails(&check_path_sum(&bad));
}

#[test]
fn corrupted_counts_break_the_doubling_bound() {
    let f = fixture(FixtureKind::GEvent);
    let s = f.report.big_jumps[0].time as usize + 2;
    let mut bad = f.traj.clone();
    let top = bad.generations[s].positions[128];
    bad.generations[s].positions[123..].iter_mut().for_each(|p| *p = top);
    assert_fails(&check_doubling(&bad));
}

#[test]
fn corrupted_leader_breaks_the_second_rightmost_bound() {
    let f = fixture(FixtureKind::GEvent);
    let mut bad = f.traj.clone();
    bad.generations[12].positions[128] = 1e12;
    assert_fails(&check_second_rightmost(&bad));
    assert!(check_basic(&bad).iter().any(|v| v.status() == Status::Fail));
}

#[test]
fn corrupted_big_free_path_breaks_lemma_c4() {
    let f = fixture(FixtureKind::GEvent);
    let mut bad = f.traj.clone();
    let c1a = f.schedule.c1() * f.traj.a();
    bad.generations[f.t as usize].positions[128] += 2.0 * c1a;
    assert_eq!(support(&f, &f.traj, "lemma_C4").status(), Status::Pass);
    assert_fails(&support(&f, &bad, "lemma_C4"));
}

#[test]
fn corrupted_descendant_breaks_lemma_c3c4() {
    let f = fixture(FixtureKind::GEvent);
    let s = f.report.big_jumps[0].time;
    let mut bad = f.traj.clone();
    bad.generations[s as usize + 2].positions[128] += 2.0 * f.schedule.c1() * f.traj.a();
    assert_fails(&support(&f, &bad, "lemma_C3C4"));
}

#[test]
fn corrupted_bystander_breaks_record_gap_a() {
    let f = fixture(FixtureKind::GEvent);
    let s = f.report.big_jumps[0].time;
    let mut bad = f.traj.clone();
    bad.generations[s as usize + 1].positions[0] = f.traj.leader(s) + 2.0 * f.report.big_threshold;
    assert_fails(&support(&f, &bad, "breakRecordGap_a"));
}

#[test]
fn corrupted_runner_up_breaks_record_gap_b() {
    let f = fixture(FixtureKind::GEvent);
    let s = f.report.big_jumps[0].time as usize + 1;
    let mut bad = f.traj.clone();
    bad.generations[s].positions[127] = bad.generations[s].positions[128];
    assert_fails(&support(&f, &bad, "breakRecordGap_b"));
}

// ---------------------------------------------------------------------------
// Fault injection on event reports.
// ---------------------------------------------------------------------------

fn flip(report: &EventReport, names: &[(&str, bool)]) -> EventReport {
    let mut r = report.clone();
    for &(name, value) in names {
        r.flags.get_mut(name).expect("known flag").holds = Some(value);
    }
    r
}

#[test]
fn failed_conclusion_of_prop_b_is_reported() {
    let f = fixture(FixtureKind::PropB);
    let v = check_prop_b_from_report(&flip(&f.report, &[("b1", false)]), f.traj.n(), SizeMode::Realized);
    assert_fails(&v);
    let vac = check_prop_b_from_report(&flip(&f.report, &[("c1", false)]), f.traj.n(), SizeMode::Realized);
    assert_eq!(vac.status(), Status::NotEvaluated);
}

#[test]
fn failed_conclusion_of_lemma_a_is_reported() {
    let f = fixture(FixtureKind::PropB);
    assert_fails(&check_lemma_a(&flip(&f.report, &[("b1", true), ("b2", true), ("a3", false)])));
}

#[test]
fn failed_conclusion_of_prop_c_is_reported() {
    let f = fixture(FixtureKind::GEvent);
    let hyp = [
        ("c2", true),
        ("c3", true),
        ("c4", true),
        ("c5", true),
        ("c6", true),
        ("c7", true),
        ("d1", true),
        ("d2", true),
        ("d3", true),
        ("d4", true),
        ("d5", true),
    ];
    let mut r = flip(&f.report, &hyp);
    let good = check_prop_c_from_report(&r);
    assert_eq!(good.status(), Status::Pass, "{}", good.note);
    r = flip(&r, &[("c1", false)]);
    assert_fails(&check_prop_c_from_report(&r));
}

#[test]
fn failed_a2_prime_on_a_star_is_reported() {
    let f = fixture(FixtureKind::Star);
    let r = flip(&f.report, &[("a2_prime", false)]);
    assert_fails(&nbrw::verify::check_a2_prime_inclusion(&f.traj, &r, &f.sample, &f.params));
}

#[test]
fn events_are_reproducible_on_the_fixture() {
    let f = fixture(FixtureKind::NoRecord);
    let again = evaluate_events(&f.traj, &f.schedule, f.t, &f.sample, &f.params).unwrap();
    assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(&f.report).unwrap());
}

// ---------------------------------------------------------------------------
// Rewrite bound.
// ---------------------------------------------------------------------------

#[test]
fn rewrite_bound_verdicts() {
    let base = RewriteCounts { replicates: 400, a2_fail: 10, a3_fail: 4, a4_fail: 2, eta: 0.05, nu: 0.001, m: 2 };
    assert_eq!(check_lemma_rewrite_bound(&base).status(), Status::Pass);
    assert_fails(&check_lemma_rewrite_bound(&RewriteCounts { a2_fail: 200, ..base }));
    assert_eq!(check_lemma_rewrite_bound(&RewriteCounts { replicates: 50, ..base }).status(), Status::NotEvaluated);
    assert_eq!(check_lemma_rewrite_bound(&RewriteCounts { nu: 0.02, ..base }).status(), Status::NotEvaluated);
}
