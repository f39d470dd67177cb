//! Synthetic trajectories on which chosen hypothesis sets hold.
//!
//! A fixture is an engine run whose jump source returns zero everywhere
//! except at planned sites. Every planned jump is made by rank 0, the
//! leftmost particle, on branch 1. Particles at one position form a cluster
//! sharing one ancestry, so the population is a handful of clusters whose
//! sizes follow exactly from the selection rule. A small planner simulates
//! these clusters to place jumps that keep the hypotheses intact, the engine
//! replays the plan, and the events are evaluated to confirm the result.

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{run_direct_with, JumpSite, PolicySource, Recorder, RunConfig, TableSource};
use crate::error::{Error, Result};
use crate::events::{evaluate_events, EventParams, EventReport, Window};
use crate::genealogy::ancestors_at;
use crate::rng::mix64;
use crate::schedule::ConstantSchedule;
use crate::tails::{epsilon_schedule, time_scale, TailLaw};
use crate::trajectory::Trajectory;

use super::{check_support_lemmas, prop_b_size, prop_c_case, prop_c_size, PropCCase, SizeMode};

/// Which hypothesis set a fixture realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    /// `𝒞₁ … 𝒞₇` with the realized size condition.
    PropB,
    /// Prop C hypotheses, small diameter at some `τ₂ ≤ t₁ − c₅ℓ_N`.
    #[serde(rename = "propC_case1")]
    PropCCase1,
    /// Prop C hypotheses, large diameter throughout and a surpassing jump.
    #[serde(rename = "propC_case2a")]
    PropCCase2a,
    /// `𝒢`: one jump above `(r+3)a_N` in the `𝒜₂′` window, all others at most `a_N`.
    #[serde(rename = "G_event")]
    GEvent,
    /// One record whose tribe takes over; a sample through rank `N` at `T`.
    Star,
    /// `𝒞₃ ∩ 𝒞₄` with surviving big jumps in `[t₃, t−1]`.
    BigJumpLeftmost,
    /// `𝒞₂ … 𝒞₅` with both parts of the no-record lemma non-vacuous.
    NoRecord,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 7] = [
        FixtureKind::PropB,
        FixtureKind::PropCCase1,
        FixtureKind::PropCCase2a,
        FixtureKind::GEvent,
        FixtureKind::Star,
        FixtureKind::BigJumpLeftmost,
        FixtureKind::NoRecord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::PropB => "propB",
            FixtureKind::PropCCase1 => "propC_case1",
            FixtureKind::PropCCase2a => "propC_case2a",
            FixtureKind::GEvent => "G_event",
            FixtureKind::Star => "star",
            FixtureKind::BigJumpLeftmost => "big_jump_leftmost",
            FixtureKind::NoRecord => "no_record",
        }
    }

    fn is_prop_c(self) -> bool {
        matches!(self, FixtureKind::PropCCase1 | FixtureKind::PropCCase2a)
    }
}

impl FromStr for FixtureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown fixture kind {s:?}")))
    }
}

/// What to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRequest {
    pub kind: FixtureKind,
    pub schedule: ConstantSchedule,
    /// `None` picks the smallest admissible `N`.
    pub n: Option<u64>,
    /// `None` picks `4ℓ_N + 1`.
    pub t: Option<u32>,
    /// Sample size for the star fixture.
    pub m: usize,
}

impl FixtureRequest {
    pub fn new(kind: FixtureKind, schedule: ConstantSchedule) -> Self {
        FixtureRequest { kind, schedule, n: None, t: None, m: 2 }
    }
}

/// A built fixture with its evaluated events.
pub struct Fixture {
    pub kind: FixtureKind,
    pub traj: Trajectory,
    /// Replays the fixture through either construction.
    pub table: TableSource,
    pub t: u32,
    pub schedule: ConstantSchedule,
    pub sample: Vec<usize>,
    pub params: EventParams,
    pub report: EventReport,
    /// Chosen sizes and other facts about the construction.
    pub notes: Vec<String>,
}

fn infeasible<T>(kind: FixtureKind, msg: impl Into<String>) -> Result<T> {
    Err(Error::Infeasible(format!("{}: {}", kind.name(), msg.into())))
}

/// `⌈x ℓ⌉`, `⌊x ℓ⌋` on a given `ℓ`.
fn ceil_l(x: f64, ell: u32) -> u32 {
    (x * ell as f64).ceil() as u32
}
fn floor_l(x: f64, ell: u32) -> u32 {
    (x * ell as f64).floor() as u32
}

/// Static feasibility of a kind at a given `ℓ_N`, before any planning.
fn static_check(kind: FixtureKind, sched: &ConstantSchedule, ell: u32) -> std::result::Result<(), String> {
    let dl = ceil_l(sched.delta, ell);
    let small = match kind {
        FixtureKind::PropB => ell >= 2 * dl + 4,
        FixtureKind::PropCCase1 | FixtureKind::PropCCase2a => {
            let q = floor_l(sched.c5(), ell) + 1;
            // D2 asks for a jump every q steps; C6 forbids dl + 1 consecutive times.
            if q < dl + 2 {
                return Err(format!("ℓ = {ell}: ⌊c₅ℓ⌋ + 1 = {q} < ⌈δℓ⌉ + 2 = {}", dl + 2));
            }
            if dl + 1 > ell.div_ceil(2) {
                return Err(format!("ℓ = {ell}: no room for the D3 jump"));
            }
            let w = Window { t: 4 * ell + 1, ell, t1: 3 * ell + 1, t2: 2 * ell + 1, t3: ell + 1, t4: 1, a: 1.0 };
            if !prop_c_size(&w, sched) {
                return Err(format!("ℓ = {ell}: ℓ − ⌈c₅ℓ⌉ < ⌈ℓ/2⌉"));
            }
            true
        }
        _ => true,
    };
    if !small {
        return Err(format!("ℓ = {ell} too small"));
    }
    Ok(())
}

/// Smallest `ℓ_N` at which `kind` can be planned; small kinds use at least 8.
pub fn smallest_ell(kind: FixtureKind, sched: &ConstantSchedule) -> Result<u32> {
    let lo = if kind.is_prop_c() { 2 } else { 8 };
    (lo..=30).find(|&ell| static_check(kind, sched, ell).is_ok()).map_or_else(
        || infeasible(kind, "no ℓ_N ≤ 30 satisfies the timing constraints of this schedule"),
        Ok,
    )
}

/// Smallest admissible `N = 2^{ℓ−1} + 1` for `kind`.
pub fn smallest_n(kind: FixtureKind, sched: &ConstantSchedule) -> Result<u64> {
    Ok((1u64 << (smallest_ell(kind, sched)? - 1)) + 1)
}

// ---------------------------------------------------------------------------
// Cluster planner.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Cluster {
    pos: f64,
    size: u64,
    /// Time of the jump that created the cluster; `None` for the initial one.
    born: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    /// Land `gap · a_N` beyond the leader.
    Record { gap: f64 },
    /// Land `x` to the right, below the next cluster.
    Mid { x: f64 },
}

impl Move {
    fn value(self, low: f64, lead: f64, a: f64) -> f64 {
        match self {
            Move::Record { gap } => (lead - low) + gap * a,
            Move::Mid { x } => x,
        }
    }
}

/// Timeline of one fixture.
struct Blueprint {
    n: u64,
    t: u32,
    ell: u32,
    a: f64,
    sched: ConstantSchedule,
    records: Vec<(u32, f64)>,
    fixed_mids: Vec<u32>,
    /// `(first window start, last window start, window length)` for `𝒟₂`.
    cover: Option<(u32, u32, u32)>,
    mid_span: (u32, u32),
    forbidden: Vec<(u32, u32)>,
    d4: Option<(u32, u32)>,
}

impl Blueprint {
    fn forbidden(&self, s: u32) -> bool {
        self.forbidden.iter().any(|&(lo, hi)| s >= lo && s <= hi)
    }

    /// Whether jumping `x` from the leftmost cluster at `s` keeps the local
    /// hypotheses: clean ancestry, the near-leader exclusions, `𝒟₄`, `𝒟₅`.
    fn admissible(&self, cl: &[Cluster], s: u32, x: f64) -> bool {
        let (low, lead) = (cl[0].pos, cl[cl.len() - 1].pos);
        let (a, c) = (self.a, &self.sched.c);
        let clean = cl[0].born.is_none_or(|b| s > b + self.ell);
        let z = lead - low;
        let c2_ok = z < c[2] * a || !(x > z - 2.0 * c[1] * a && x <= z + 2.0 * c[1] * a);
        let d1_ok = z < c[3] * a || !(x > z - 3.0 * c[2] * a && x <= z + 3.0 * c[2] * a);
        let lo5 = 2.0 * c[3] * a;
        let d5_ok = !(x > lo5 && x <= lo5 + 3.0 * c[2] * a);
        let d4_ok = self.d4.is_none_or(|(lo, hi)| s < lo || s > hi || x <= c[5] * a);
        let qualifies = x > 2.0 * c[3] * a && x > self.sched.rho * a;
        clean && c2_ok && d1_ok && d5_ok && d4_ok && qualifies
    }

    /// The `k`-th intermediate jump: a fixed ladder of values below the
    /// leader, so repeated jumps from one cluster land at distinct places.
    fn mid_value(&self, cl: &[Cluster], k: usize) -> Option<f64> {
        let x = 0.05 * self.a * (1.0 + k as f64 / 16.0);
        let (low, lead) = (cl[0].pos, cl[cl.len() - 1].pos);
        (low + x < lead - 4.0 * self.sched.c[2] * self.a).then_some(x)
    }

    fn must_cover(&self, s: u32, last: Option<u32>) -> bool {
        match self.cover {
            Some((lo, hi, q)) if s + 1 >= q => {
                let w0 = s + 1 - q;
                w0 >= lo && w0 <= hi && last.is_none_or(|l| l < w0)
            }
            _ => false,
        }
    }
}

/// One step of the cluster dynamics, mirroring selection of the `N` largest.
fn advance(cl: &[Cluster], mv: Option<Move>, s: u32, n: u64, a: f64) -> Option<Vec<Cluster>> {
    let mut off: Vec<Cluster> = cl.iter().map(|c| Cluster { size: 2 * c.size, ..c.clone() }).collect();
    if let Some(mv) = mv {
        let (low, lead) = (cl[0].pos, cl[cl.len() - 1].pos);
        let land = low + mv.value(low, lead, a);
        if cl.iter().any(|c| c.pos == land) {
            return None;
        }
        off[0].size -= 1;
        off.push(Cluster { pos: land, size: 1, born: Some(s) });
        off.sort_by(|p, q| p.pos.total_cmp(&q.pos));
    }
    let mut left = n;
    let mut out = Vec::new();
    for c in off.into_iter().rev() {
        if left == 0 {
            break;
        }
        let take = c.size.min(left);
        left -= take;
        if take > 0 {
            out.push(Cluster { size: take, ..c });
        }
    }
    out.reverse();
    Some(out)
}

struct Search<'a> {
    plan: &'a Blueprint,
    budget: u64,
    moves: Vec<(u32, Move)>,
}

impl Search<'_> {
    fn run(&mut self, s: u32, cl: Vec<Cluster>, last: Option<u32>) -> bool {
        if self.budget == 0 {
            return false;
        }
        self.budget -= 1;
        let plan = self.plan;
        if s >= plan.t {
            return true;
        }
        let low_lead = |cl: &[Cluster]| (cl[0].pos, cl[cl.len() - 1].pos);
        let attempt = |this: &mut Self, mv: Move| -> bool {
            let (low, lead) = low_lead(&cl);
            let x = mv.value(low, lead, plan.a);
            if plan.forbidden(s) || !plan.admissible(&cl, s, x) {
                return false;
            }
            let Some(next) = advance(&cl, Some(mv), s, plan.n, plan.a) else {
                return false;
            };
            this.moves.push((s, mv));
            if this.run(s + 1, next, Some(s)) {
                return true;
            }
            this.moves.pop();
            false
        };
        if let Some(&(_, gap)) = plan.records.iter().find(|r| r.0 == s) {
            return attempt(self, Move::Record { gap });
        }
        let mids = self.moves.iter().filter(|m| matches!(m.1, Move::Mid { .. })).count();
        let mid = plan.mid_value(&cl, mids).map(|x| Move::Mid { x });
        if plan.fixed_mids.contains(&s) {
            return mid.is_some_and(|mv| attempt(self, mv));
        }
        let may_mid = plan.cover.is_some() && s >= plan.mid_span.0 && s <= plan.mid_span.1 && mid.is_some();
        if !plan.must_cover(s, last) {
            let next = advance(&cl, None, s, plan.n, plan.a).expect("no landing");
            if self.run(s + 1, next, last) {
                return true;
            }
        }
        may_mid && attempt(self, mid.expect("checked"))
    }
}

fn plan(plan: &Blueprint, kind: FixtureKind) -> Result<Vec<(u32, Move)>> {
    let start = vec![Cluster { pos: 0.0, size: plan.n, born: None }];
    let mut search = Search { plan, budget: 2_000_000, moves: Vec::new() };
    if search.run(0, start, None) {
        Ok(search.moves)
    } else if search.budget == 0 {
        infeasible(kind, "planner budget exhausted")
    } else {
        infeasible(kind, "no jump plan satisfies the timeline")
    }
}

fn timeline(kind: FixtureKind, sched: &ConstantSchedule, n: u64, t: u32, a: f64) -> Blueprint {
    let ell = time_scale(n).expect("n ≥ 2");
    let (t1, t2, t3) = (t - ell, t - 2 * ell, t - 3 * ell);
    let dl = ceil_l(sched.delta, ell);
    let c5l = sched.c5() * ell as f64;
    let q = floor_l(sched.c5(), ell) + 1;
    let forbidden = vec![(t2, t2 + dl), (t1.saturating_sub(dl), t1 + dl)];
    let mut plan = Blueprint {
        n,
        t,
        ell,
        a,
        sched: *sched,
        records: Vec::new(),
        fixed_mids: Vec::new(),
        cover: None,
        mid_span: (0, 0),
        forbidden,
        d4: Some((t2.saturating_sub(ceil_l(sched.c5(), ell)), t2)),
    };
    let cover = Some((t3, (t1 as f64 - c5l).floor() as u32, q));
    let s_lo = t2 + ceil_l(0.25, ell);
    match kind {
        FixtureKind::PropB => plan.records = vec![(t2 + dl + 1, 0.4)],
        FixtureKind::PropCCase1 => {
            plan.records = vec![(t3, 0.4), (t2 + dl + 1, 2.5)];
            plan.cover = cover;
            plan.mid_span = (t3 + 1, t1 - dl - 1);
        }
        FixtureKind::PropCCase2a => {
            let sigma = (ell + 1).div_ceil(2);
            plan.records = vec![(t3, 0.4), (t3 + sigma, 0.4), (t2 + dl + 1, 2.0)];
            plan.cover = cover;
            plan.mid_span = (t3 + 1, t1 - dl - 1);
        }
        FixtureKind::GEvent => {
            plan.records = vec![(s_lo, 4.5)];
            plan.forbidden.clear();
        }
        FixtureKind::Star => {
            plan.records = vec![(s_lo, 0.4)];
            plan.forbidden.clear();
        }
        FixtureKind::BigJumpLeftmost => {
            plan.records = vec![(t3, 0.4), (t3 + ell + 1, 0.4)];
            plan.fixed_mids = vec![t3 + 2];
            plan.forbidden.clear();
        }
        FixtureKind::NoRecord => {
            plan.records = vec![(t3, 0.4)];
            plan.fixed_mids = vec![t3 + 2];
            plan.forbidden.clear();
        }
    }
    plan
}

// ---------------------------------------------------------------------------
// Building and confirming.
// ---------------------------------------------------------------------------

/// Build `req.kind`, confirm its hypotheses on the evaluated events, and
/// return it with its events; infeasible requests return an explanation.
pub fn build_fixture(req: &FixtureRequest) -> Result<Fixture> {
    let kind = req.kind;
    let sched = req.schedule;
    if let Some(v) = sched.chain_violation() {
        return infeasible(kind, format!("schedule violates the ordering chain: {v}"));
    }
    let mut notes = Vec::new();
    let n = match req.n {
        Some(n) => {
            let ell = time_scale(n)?;
            if let Err(e) = static_check(kind, &sched, ell) {
                return infeasible(kind, format!("N = {n}: {e}"));
            }
            n
        }
        None => {
            let n = smallest_n(kind, &sched)?;
            notes.push(format!("smallest admissible N = {n}"));
            n
        }
    };
    let ell = time_scale(n)?;
    let t = req.t.unwrap_or(4 * ell + 1);
    if t <= 4 * ell {
        return infeasible(kind, format!("t = {t} must exceed 4ℓ_N = {}", 4 * ell));
    }
    let law = TailLaw::pareto(sched.alpha)?;
    let cfg = RunConfig::new(law, n, t, 0);
    let a = cfg.prepare()?.0.a;
    let blueprint = timeline(kind, &sched, n, t, a);
    let moves = plan(&blueprint, kind)?;
    notes.push(format!("{} planned jumps: {:?}", moves.len(), moves.iter().map(|m| m.0).collect::<Vec<_>>()));

    let eps_ell = epsilon_schedule(ell).min(ell);
    let params = EventParams::new(eps_ell);
    // Equal positions resolve by label, which favours one founder of the star
    // tribe; sub-threshold jitter after `T + ε_Nℓ_N` lets several lines survive.
    let jitter_from = (kind == FixtureKind::Star).then(|| moves.last().map_or(0, |m| m.0) + 1 + eps_ell);
    let attempts = if jitter_from.is_some() { 64 } else { 1 };
    let mut last_err = None;
    for seed in 0..attempts {
        let by_time: HashMap<u32, Move> = moves.iter().copied().collect();
        let jitter = 1e-3 * sched.rho * a;
        let policy = move |site: &JumpSite| match by_time.get(&site.time) {
            Some(mv) if site.rank == 0 && site.branch == 1 => {
                let p = site.positions;
                mv.value(p[0], p[p.len() - 1], a)
            }
            _ if jitter_from.is_some_and(|s| site.time >= s) => {
                let u = (mix64(site.key.bits() ^ mix64(seed)) >> 11) as f64 / (1u64 << 53) as f64;
                jitter * u
            }
            _ => 0.0,
        };
        let label = format!("fixture:{}", kind.name());
        let mut rec = Recorder::new(PolicySource { policy, label: label.clone() });
        let traj = run_direct_with(&cfg, &mut rec)?;
        let table = rec.into_table(label);
        let big_t = evaluate_events(&traj, &sched, t, &[n as usize - 1], &params)?.big_t;
        let built = choose_sample(kind, &traj, t, big_t, eps_ell, req.m).and_then(|sample| {
            let report = evaluate_events(&traj, &sched, t, &sample, &params)?;
            confirm(kind, &traj, &report, &sample, &params)?;
            Ok((sample, report))
        });
        match built {
            Ok((sample, report)) => {
                if jitter_from.is_some() {
                    notes.push(format!("jitter seed {seed}"));
                }
                notes.push(format!("N = {n}, ℓ_N = {ell}, t = {t}, a_N = {a}"));
                return Ok(Fixture { kind, traj, table, t, schedule: sched, sample, params, report, notes });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Leader at `t` for most kinds; for the star, `m` particles split evenly
/// over the tribe at `T + ε_Nℓ_N`.
fn choose_sample(kind: FixtureKind, traj: &Trajectory, t: u32, big_t: u32, eps_ell: u32, m: usize) -> Result<Vec<usize>> {
    let n = traj.n();
    if kind != FixtureKind::Star {
        return Ok(vec![n - 1]);
    }
    if m == 0 || m > n {
        return infeasible(kind, format!("sample size {m} outside [1, N]"));
    }
    if big_t == 0 || big_t + eps_ell > t {
        return infeasible(kind, format!("record time {big_t} leaves no room for the tribe"));
    }
    let later = big_t + eps_ell;
    let from_t = ancestors_at(traj, later, big_t);
    let founders: Vec<usize> = (0..n).filter(|&i| from_t[i] as usize == n - 1).collect();
    let at = ancestors_at(traj, t, later);
    let mut groups: Vec<Vec<usize>> = founders.iter().map(|&f| (0..n).filter(|&i| at[i] as usize == f).collect()).collect();
    groups.retain(|g| !g.is_empty());
    let want = m.min(1usize << eps_ell.min(20));
    if groups.len() < want {
        return infeasible(kind, format!("{} founder lines survive, {want} needed", groups.len()));
    }
    let mut sample = Vec::with_capacity(m);
    let mut round = 0;
    while sample.len() < m {
        let before = sample.len();
        for g in &groups {
            if sample.len() < m && round < g.len() {
                sample.push(g[round]);
            }
        }
        if sample.len() == before {
            return infeasible(kind, "tribe too small for the sample");
        }
        round += 1;
    }
    Ok(sample)
}

fn require(report: &EventReport, names: &[&str]) -> std::result::Result<(), String> {
    let bad: Vec<String> = names
        .iter()
        .filter_map(|n| match report.flags.get(n).map(|f| (f.holds, &f.witness)) {
            Some((Some(true), _)) => None,
            Some((Some(false), w)) => Some(format!("{n} ({w:?})")),
            _ => Some(format!("{n} (undefined)")),
        })
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(format!("events fail: {}", bad.join(", ")))
    }
}

fn confirm(kind: FixtureKind, traj: &Trajectory, r: &EventReport, sample: &[usize], params: &EventParams) -> Result<()> {
    let w = &r.window;
    let outcome = match kind {
        FixtureKind::PropB => require(r, &["c1", "c2", "c3", "c4", "c5", "c6", "c7"]).and_then(|_| {
            let (ok, why) = prop_b_size(r, traj.n(), SizeMode::Realized);
            if ok {
                Ok(())
            } else {
                Err(format!("realized size condition fails: {why}"))
            }
        }),
        FixtureKind::PropCCase1 | FixtureKind::PropCCase2a => {
            require(r, &["c2", "c3", "c4", "c5", "c6", "c7", "d1", "d2", "d3", "d4", "d5"]).and_then(|_| {
                let want = if kind == FixtureKind::PropCCase1 { PropCCase::Case1 } else { PropCCase::Case2a };
                let got = prop_c_case(r);
                if got == want {
                    Ok(())
                } else {
                    Err(format!("realized {got:?}, wanted {want:?}"))
                }
            })
        }
        FixtureKind::GEvent => require(r, &["g"]),
        FixtureKind::Star => {
            if r.leader_tribe_t != Some(traj.n()) {
                Err(format!("leader tribe at t is {:?}", r.leader_tribe_t))
            } else {
                let anc = ancestors_at(traj, w.t, r.big_t);
                if sample.iter().all(|&i| anc[i] as usize == traj.n() - 1) {
                    Ok(())
                } else {
                    Err("sample does not pass through rank N at T".into())
                }
            }
        }
        FixtureKind::BigJumpLeftmost => require(r, &["c3", "c4"]).and_then(|_| {
            let v = check_support_lemmas(traj, r, sample, params);
            match v.iter().find(|v| v.name == "bigJumpLeftmost") {
                Some(v) if v.non_vacuous() => Ok(()),
                _ => Err("no surviving big jump in [t₃, t−1]".into()),
            }
        }),
        FixtureKind::NoRecord => require(r, &["c2", "c3", "c4", "c5"]).and_then(|_| {
            let v = check_support_lemmas(traj, r, sample, params);
            let live = |name: &str| v.iter().any(|v| v.name == name && v.non_vacuous());
            if live("noRecord_a") && live("noRecord_b") {
                Ok(())
            } else {
                Err("no-record lemma vacuous".into())
            }
        }),
    };
    outcome.or_else(|e| infeasible(kind, e))
}
