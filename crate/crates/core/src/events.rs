//! Scalars, sets, times and events of a trajectory relative to a reference time `t`.
//!
//! Every flag is a direct transcription of its defining condition. The
//! [`naive`] module holds a second, brute-force transcription used to
//! cross-check this one on small trajectories.

pub mod naive;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::genealogy::ancestors_at;
use crate::schedule::{ConstantSchedule, Regime};
use crate::trajectory::Trajectory;

/// One jump `(k, b, s)` with its value `X_{k,b,s}`; `rank` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigJump {
    pub rank: usize,
    pub branch: u8,
    pub time: u32,
    pub value: f64,
}

/// Evidence attached to an event value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    None,
    Jump { jump: BigJump },
    JumpPair { first: BigJump, second: BigJump },
    Time { time: u32 },
    Particle { rank: usize, time: u32 },
    Value { value: f64, bound: f64 },
    Note { text: String },
}

/// Value of one event: `holds` is `None` when the event is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub holds: Option<bool>,
    pub witness: Witness,
}

impl Flag {
    pub fn yes(witness: Witness) -> Self {
        Flag { holds: Some(true), witness }
    }
    pub fn no(witness: Witness) -> Self {
        Flag { holds: Some(false), witness }
    }
    pub fn of(holds: bool, witness: Witness) -> Self {
        Flag { holds: Some(holds), witness }
    }
    pub fn undefined(text: impl Into<String>) -> Self {
        Flag { holds: None, witness: Witness::Note { text: text.into() } }
    }
    /// True only when the event is defined and holds.
    pub fn is_true(&self) -> bool {
        self.holds == Some(true)
    }
}

fn note(text: impl Into<String>) -> Witness {
    Witness::Note { text: text.into() }
}

/// Parameters of the sample-based events beyond the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventParams {
    /// `ε_N ℓ_N`.
    pub eps_ell: u32,
    /// Window `[s₁, s₂]` of the restricted coalescence event.
    pub s1: f64,
    pub s2: f64,
    /// Level `r` of the single-large-jump event.
    pub r: f64,
}

impl EventParams {
    pub fn new(eps_ell: u32) -> Self {
        EventParams { eps_ell, s1: 0.25, s2: 0.75, r: 1.0 }
    }
}

/// All event flags, named after their events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub a1: Flag,
    pub a2: Flag,
    pub a2_prime: Flag,
    pub a3: Flag,
    pub a4: Flag,
    pub b1: Flag,
    pub b2: Flag,
    pub c1: Flag,
    pub c2: Flag,
    pub c3: Flag,
    pub c4: Flag,
    pub c5: Flag,
    pub c6: Flag,
    pub c7: Flag,
    pub d1: Flag,
    pub d2: Flag,
    pub d3: Flag,
    pub d4: Flag,
    pub d5: Flag,
    pub g: Flag,
}

impl Flags {
    /// `(name, flag)` pairs in a fixed order.
    pub fn iter(&self) -> Vec<(&'static str, &Flag)> {
        vec![
            ("A1", &self.a1),
            ("A2", &self.a2),
            ("A2'", &self.a2_prime),
            ("A3", &self.a3),
            ("A4", &self.a4),
            ("B1", &self.b1),
            ("B2", &self.b2),
            ("C1", &self.c1),
            ("C2", &self.c2),
            ("C3", &self.c3),
            ("C4", &self.c4),
            ("C5", &self.c5),
            ("C6", &self.c6),
            ("C7", &self.c7),
            ("D1", &self.d1),
            ("D2", &self.d2),
            ("D3", &self.d3),
            ("D4", &self.d4),
            ("D5", &self.d5),
            ("G", &self.g),
        ]
    }

    /// Mutable lookup by the lowercase field name, for fault injection.
    pub fn get_mut(&mut self, name: &str) -> Option<&mut Flag> {
        Some(match name.to_ascii_lowercase().as_str() {
            "a1" => &mut self.a1,
            "a2" => &mut self.a2,
            "a2_prime" | "a2'" => &mut self.a2_prime,
            "a3" => &mut self.a3,
            "a4" => &mut self.a4,
            "b1" => &mut self.b1,
            "b2" => &mut self.b2,
            "c1" => &mut self.c1,
            "c2" => &mut self.c2,
            "c3" => &mut self.c3,
            "c4" => &mut self.c4,
            "c5" => &mut self.c5,
            "c6" => &mut self.c6,
            "c7" => &mut self.c7,
            "d1" => &mut self.d1,
            "d2" => &mut self.d2,
            "d3" => &mut self.d3,
            "d4" => &mut self.d4,
            "d5" => &mut self.d5,
            "g" => &mut self.g,
            _ => return None,
        })
    }

    /// Look up a flag by name, ignoring case; `a2_prime` also names `A2'`.
    pub fn get(&self, name: &str) -> Option<&Flag> {
        let name = if name.eq_ignore_ascii_case("a2_prime") { "A2'" } else { name };
        self.iter().into_iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, f)| f)
    }
}

/// Landmarks `t_i = t − iℓ_N` and the space scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub t: u32,
    pub ell: u32,
    pub t1: u32,
    pub t2: u32,
    pub t3: u32,
    pub t4: u32,
    pub a: f64,
}

impl Window {
    /// Requires `4ℓ_N < t ≤` the trajectory length.
    pub fn new(traj: &Trajectory, t: u32) -> Result<Self> {
        let ell = traj.scales.ell;
        if t <= 4 * ell {
            return domain(format!("need t > 4ℓ_N = {}, got t = {t}", 4 * ell));
        }
        if t > traj.t() {
            return domain(format!("t = {t} beyond the trajectory end {}", traj.t()));
        }
        Ok(Window { t, ell, t1: t - ell, t2: t - 2 * ell, t3: t - 3 * ell, t4: t - 4 * ell, a: traj.a() })
    }

    /// `⌈x ℓ_N⌉`.
    pub fn ceil_ell(&self, x: f64) -> u32 {
        (x * self.ell as f64).ceil() as u32
    }

    /// `⌊x⌋` for a real time bound, clamped at 0.
    pub fn floor_time(x: f64) -> u32 {
        x.floor().max(0.0) as u32
    }
}

/// `coef · c · a_N`, evaluated in one fixed order everywhere.
#[inline]
pub fn scaled(coef: f64, c: f64, a: f64) -> f64 {
    coef * c * a
}

/// Everything evaluated on one trajectory at one reference time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub window: Window,
    pub eps_ell: u32,
    pub schedule: ConstantSchedule,
    pub regime: Regime,
    /// `ρ a_N`.
    pub big_threshold: f64,
    /// `B_N = B_N^{[t₄, t−1]}`.
    pub big_jumps: Vec<BigJump>,
    /// `𝐒_N` with the big jump that produced each new leader.
    pub record_times: Vec<u32>,
    pub record_jumps: Vec<BigJump>,
    /// `Ŝ_N`.
    pub surpass_times: Vec<u32>,
    /// `T(ρ)`, 0 when undefined.
    #[serde(rename = "T")]
    pub big_t: u32,
    pub tau1: Option<u32>,
    pub tau2: Option<u32>,
    pub tau3: Option<u32>,
    /// `d(𝒳(s))` for `s = t₄, …, t`.
    pub diameter: Vec<f64>,
    /// `L_{η,N}(t)`.
    pub l_eta_t: usize,
    /// `R_{c₁,N}(t₁)`.
    pub r_c1_t1: usize,
    /// `|𝒩_{N,T}(t)|` when `T > 0`.
    pub leader_tribe_t: Option<usize>,
    pub flags: Flags,
    /// Clipping and other diagnostics.
    pub notes: Vec<String>,
}

impl EventReport {
    pub fn d(&self, s: u32) -> f64 {
        self.diameter[(s - self.window.t4) as usize]
    }
    pub fn in_s(&self, s: u32) -> bool {
        self.record_times.binary_search(&s).is_ok()
    }
    pub fn in_s_hat(&self, s: u32) -> bool {
        self.surpass_times.binary_search(&s).is_ok()
    }
}

/// `d`, `L_{r,N}(n)`, `R_{ε,N}(n)` and the vector `Z_i(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub d: f64,
    pub l: usize,
    pub r: usize,
    pub z: Vec<f64>,
}

/// `L_{r,N}(n) = max{i : 𝒳_i(n) ≤ 𝒳_1(n) + r a_N}` on sorted positions.
pub fn l_count(pos: &[f64], r: f64, a: f64) -> usize {
    let bound = pos[0] + r * a;
    pos.partition_point(|&x| x <= bound)
}

/// `R_{ε,N}(n) = max{i : 𝒳_{N−i+1}(n) ≥ 𝒳_N(n) − ε a_N}` on sorted positions.
pub fn r_count(pos: &[f64], eps: f64, a: f64) -> usize {
    let bound = pos[pos.len() - 1] - eps * a;
    pos.len() - pos.partition_point(|&x| x < bound)
}

pub fn population_stats(traj: &Trajectory, n: u32, r: f64, eps: f64) -> Result<PopulationStats> {
    if n > traj.t() {
        return domain(format!("time {n} beyond trajectory end {}", traj.t()));
    }
    let pos = traj.positions(n);
    let a = traj.a();
    let lead = pos[pos.len() - 1];
    Ok(PopulationStats {
        d: lead - pos[0],
        l: l_count(pos, r, a),
        r: r_count(pos, eps, a),
        z: pos.iter().map(|&x| lead - x).collect(),
    })
}

/// `B_N^{[s₁,s₂]}(ρ)`, sorted by time, rank, branch.
pub fn big_jumps(traj: &Trajectory, rho: f64, s1: u32, s2: u32) -> Result<Vec<BigJump>> {
    if s2 >= traj.t() && s1 <= s2 {
        return domain(format!("window end {s2} must be below {}", traj.t()));
    }
    Ok(big_jumps_above(traj, rho * traj.a(), s1, s2))
}

fn big_jumps_above(traj: &Trajectory, threshold: f64, s1: u32, s2: u32) -> Vec<BigJump> {
    let mut out = Vec::new();
    if s2 < s1 {
        return out;
    }
    for s in s1..=s2.min(traj.t().saturating_sub(1)) {
        traj.jumps(s).for_each_above(threshold, |rank, branch, value| {
            out.push(BigJump { rank, branch, time: s, value });
        });
    }
    out
}

/// `𝐒_N(ρ) ∩ [s₁, s₂]` with the witnessing jump of each time.
pub fn record_times(traj: &Trajectory, rho: f64, s1: u32, s2: u32) -> Result<(Vec<u32>, Vec<BigJump>)> {
    if s2 >= traj.t() && s1 <= s2 {
        return domain(format!("window end {s2} must be below {}", traj.t()));
    }
    let threshold = rho * traj.a();
    let top = traj.n() - 1;
    let mut times = Vec::new();
    let mut jumps = Vec::new();
    for s in s1..=s2 {
        let (k, b) = (traj.parent(top, s + 1), traj.branch(top, s + 1));
        let x = traj.jump(k, b, s);
        if x > threshold {
            times.push(s);
            jumps.push(BigJump { rank: k, branch: b, time: s, value: x });
        }
    }
    Ok((times, jumps))
}

/// `Ŝ_N(ρ) ∩ [s₁, s₂]`.
pub fn surpass_times(traj: &Trajectory, rho: f64, s1: u32, s2: u32) -> Result<Vec<u32>> {
    if s2 >= traj.t() && s1 <= s2 {
        return domain(format!("window end {s2} must be below {}", traj.t()));
    }
    let threshold = rho * traj.a();
    let mut out = Vec::new();
    for s in s1..=s2 {
        let pos = traj.positions(s);
        let lead = pos[pos.len() - 1];
        let mut hit = false;
        traj.jumps(s).for_each_above(threshold, |k, _, x| hit |= pos[k] + x > lead);
        if hit {
            out.push(s);
        }
    }
    Ok(out)
}

/// `T(ρ) = 1 + max(𝐒_N(ρ) ∩ [t₄, t₁ − 1])`, or 0.
pub fn last_record_time(traj: &Trajectory, rho: f64, t: u32) -> Result<u32> {
    let w = Window::new(traj, t)?;
    let (times, _) = record_times(traj, rho, w.t4, w.t1 - 1)?;
    Ok(times.last().map_or(0, |s| s + 1))
}

/// `(τ₁, τ₂, τ₃)`.
pub fn landmark_times(traj: &Trajectory, sched: &ConstantSchedule, t: u32) -> Result<(Option<u32>, Option<u32>, Option<u32>)> {
    let w = Window::new(traj, t)?;
    let s_hat = surpass_times(traj, sched.rho, w.t4, w.t - 1)?;
    Ok((tau1(traj, sched, &w), tau2(traj, sched, &w), tau3(&s_hat, sched, &w)))
}

fn tau1(traj: &Trajectory, sched: &ConstantSchedule, w: &Window) -> Option<u32> {
    let gap = scaled(2.0, sched.c3(), w.a);
    let n = traj.n();
    (w.t2 + 1..=w.t).find(|&s| {
        let p = traj.positions(s);
        p[n - 1] > p[n - 2] + gap
    })
}

fn tau2(traj: &Trajectory, sched: &ConstantSchedule, w: &Window) -> Option<u32> {
    let bound = scaled(1.5, sched.c4(), w.a);
    (w.t2..=w.t).find(|&s| {
        let p = traj.positions(s);
        p[p.len() - 1] - p[0] <= bound
    })
}

/// `τ₃ = inf{s ≤ t₂ : ⟦s, t₂⟧ ⊆ Ŝ_Nᶜ}`, searched over `[t₂ − ⌈c₅ℓ_N⌉, t₂]`.
fn tau3(s_hat: &[u32], sched: &ConstantSchedule, w: &Window) -> Option<u32> {
    let lo = w.t2.saturating_sub(w.ceil_ell(sched.c5())).max(w.t4);
    let mut best = None;
    let mut s = w.t2;
    loop {
        if s_hat.binary_search(&s).is_ok() {
            break;
        }
        best = Some(s);
        if s == lo {
            break;
        }
        s -= 1;
    }
    best
}

/// The stopping times `T₁, T₂, …`, ending at the first `T_n = t₁`.
pub fn stopping_times(traj: &Trajectory, sched: &ConstantSchedule, t: u32) -> Result<Vec<u32>> {
    let w = Window::new(traj, t)?;
    let dl = w.ceil_ell(sched.delta);
    let (records, _) = record_times(traj, sched.rho, w.t4, w.t - 1)?;
    let hi = w.t1 as i64 - dl as i64 - 1;
    let mut prev = (w.t2 + dl) as i64 - 1;
    let mut out = Vec::new();
    loop {
        let next = records.iter().map(|&s| s as i64).find(|&s| s >= prev && s <= hi);
        match next {
            Some(s) => {
                let tn = s + 1;
                out.push(tn as u32);
                if tn as u32 == w.t1 {
                    break;
                }
                prev = tn;
            }
            None => {
                out.push(w.t1);
                break;
            }
        }
    }
    Ok(out)
}

/// `θ_{n,N}`, `â_{n,N}` and the medium jumps `ℳ_{n,N}` for one stopping time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumJumps {
    pub t_n: u32,
    pub theta: f64,
    pub a_hat: f64,
    pub jumps: Vec<BigJump>,
}

/// Default `δ₁ = δ/16` and `δ₂ = δ²/2`.
pub fn default_deltas(sched: &ConstantSchedule) -> (f64, f64) {
    (sched.delta / 16.0, sched.delta * sched.delta / 2.0)
}

pub fn medium_jump_diagnostics(
    traj: &Trajectory,
    sched: &ConstantSchedule,
    t: u32,
    t_n: u32,
    delta1: f64,
    delta2: f64,
) -> Result<MediumJumps> {
    let w = Window::new(traj, t)?;
    if !(delta1 > 0.0 && delta1 < sched.delta / 8.0) {
        return domain(format!("δ₁ must lie in (0, δ/8), got {delta1}"));
    }
    if !(delta2 > 0.0 && delta2 < sched.delta * sched.delta) {
        return domain(format!("δ₂ must lie in (0, δ²), got {delta2}"));
    }
    if t_n > w.t1 {
        return domain(format!("T_n = {t_n} after t₁ = {}", w.t1));
    }
    let theta = (w.t1 - t_n) as f64 / w.ell as f64;
    let a_hat = traj.law().h_inverse(delta1 * (traj.n() as f64).powf(theta) * w.ell as f64);
    let jumps = big_jumps_above(traj, delta2 * a_hat, w.t2, w.t - 1);
    Ok(MediumJumps { t_n, theta, a_hat, jumps })
}

/// Per-time maximum jump for `s ∈ [0, t − 1]`.
fn max_jumps(traj: &Trajectory, t: u32) -> Vec<f64> {
    (0..t)
        .map(|s| {
            let mut m = 0.0f64;
            traj.jumps(s).for_each_above(0.0, |_, _, x| m = m.max(x));
            m
        })
        .collect()
}

fn max_in(maxj: &[f64], s1: u32, s2: u32) -> (f64, Option<u32>) {
    let mut best = (0.0, None);
    for s in s1..=s2 {
        if s2 < s1 || s as usize >= maxj.len() {
            break;
        }
        if best.1.is_none() || maxj[s as usize] > best.0 {
            best = (maxj[s as usize], Some(s));
        }
    }
    best
}

fn first_above(traj: &Trajectory, threshold: f64, s1: u32, s2: u32) -> Option<BigJump> {
    big_jumps_above(traj, threshold, s1, s2).into_iter().next()
}

/// Jumps landing within `(Z − w, Z + w]` of the leader from `Z_i ≥ z_min`, over `[s₁, s₂]`.
fn near_leader_jump(traj: &Trajectory, s1: u32, s2: u32, z_min: f64, w: f64) -> Option<BigJump> {
    for s in s1..=s2 {
        let pos = traj.positions(s);
        let lead = pos[pos.len() - 1];
        let mut hit = None;
        let mut test = |i: usize, b: u8, x: f64| {
            let z = lead - pos[i];
            if hit.is_none() && z >= z_min && x > z - w && x <= z + w {
                hit = Some(BigJump { rank: i, branch: b, time: s, value: x });
            }
        };
        if z_min > w {
            traj.jumps(s).for_each_above(z_min - w, test);
        } else {
            // A zero jump may fall in the window, so scan every offspring.
            for i in 0..pos.len() {
                for b in 1..=2u8 {
                    test(i, b, traj.jump(i, b, s));
                }
            }
        }
        if hit.is_some() {
            return hit;
        }
    }
    None
}

/// `𝒞₃`: first big jump whose surviving offspring descends through an earlier
/// big jump at most `ℓ_N` steps before.
fn c3_violation(traj: &Trajectory, w: &Window, big: f64, bj: &[BigJump]) -> Option<(BigJump, BigJump)> {
    let n = traj.n();
    let mut last: Vec<Option<u32>> = vec![None; n];
    let mut next = vec![None; n];
    let mut by_time = 0usize;
    for s in w.t4..w.t {
        while by_time < bj.len() && bj[by_time].time < s {
            by_time += 1;
        }
        let g = &traj.generations[s as usize + 1];
        for c in 0..n {
            let (p, b) = (g.parents[c] as usize, g.branches[c]);
            let x = traj.jump(p, b, s);
            if x > big {
                let here = BigJump { rank: p, branch: b, time: s, value: x };
                if let Some(idx) = last[p] {
                    let first = bj[idx as usize];
                    if s - first.time <= w.ell {
                        return Some((first, here));
                    }
                }
                let idx = bj[by_time..].iter().position(|j| j.time == s && j.rank == p && j.branch == b);
                next[c] = idx.map(|k| (by_time + k) as u32);
            } else {
                next[c] = last[p];
            }
        }
        std::mem::swap(&mut last, &mut next);
    }
    None
}

/// `𝒞₄`: largest truncated path sum from any `(k₁, s₁)` with `s₁ ∈ [t₄, t−1]`.
///
/// Backward recursion over surviving children; a path may stop at any
/// descendant, and a particle without children starts no path.
fn c4_worst(traj: &Trajectory, w: &Window, big: f64) -> (f64, usize, u32) {
    let n = traj.n();
    let mut m_next = vec![0.0f64; n];
    let mut worst = (f64::NEG_INFINITY, 0usize, w.t4);
    for s in (w.t4..w.t).rev() {
        let mut m_cur = vec![f64::NEG_INFINITY; n];
        let g = &traj.generations[s as usize + 1];
        for c in 0..n {
            let (p, b) = (g.parents[c] as usize, g.branches[c]);
            let x = traj.jump(p, b, s);
            let tx = if x <= big { x } else { 0.0 };
            let v = tx + m_next[c].max(0.0);
            if v > m_cur[p] {
                m_cur[p] = v;
            }
        }
        for (i, &v) in m_cur.iter().enumerate() {
            if v > worst.0 {
                worst = (v, i, s);
            }
        }
        m_next = m_cur;
    }
    worst
}

/// Per-sample ancestor ranks at every time `0..=t`.
fn sample_ancestry(traj: &Trajectory, sample: &[usize], t: u32) -> Vec<Vec<usize>> {
    sample
        .iter()
        .map(|&i| {
            let mut line = vec![0usize; t as usize + 1];
            let mut r = i;
            line[t as usize] = r;
            for s in (1..=t).rev() {
                r = traj.parent(r, s);
                line[s as usize - 1] = r;
            }
            line
        })
        .collect()
}

fn coalescence_event(anc: &[Vec<usize>], lo: u32, hi: u32, eps_ell: u32, top: usize) -> Flag {
    if lo > hi {
        return Flag::no(note("empty window"));
    }
    for tt in lo..=hi {
        let at = |m: usize, s: u32| anc[m][s as usize];
        if !(0..anc.len()).all(|m| at(m, tt) == top) {
            continue;
        }
        let later = tt + eps_ell;
        if later as usize >= anc[0].len() {
            continue;
        }
        let mut seen: Vec<usize> = (0..anc.len()).map(|m| at(m, later)).collect();
        seen.sort_unstable();
        if seen.windows(2).all(|p| p[0] != p[1]) {
            return Flag::yes(Witness::Time { time: tt });
        }
    }
    Flag::no(note(format!("no time in [{lo}, {hi}]")))
}

/// Evaluate every event on `traj` at reference time `t`.
pub fn evaluate_events(
    traj: &Trajectory,
    sched: &ConstantSchedule,
    t: u32,
    sample: &[usize],
    params: &EventParams,
) -> Result<EventReport> {
    let w = Window::new(traj, t)?;
    let n = traj.n();
    if sample.is_empty() || sample.iter().any(|&i| i >= n) {
        return domain("sample must be a nonempty set of valid ranks");
    }
    let mut sorted = sample.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|p| p[0] == p[1]) {
        return domain("sample ranks must be distinct");
    }
    if params.eps_ell == 0 || params.eps_ell > w.ell {
        return domain(format!("ε_Nℓ_N must lie in [1, ℓ_N], got {}", params.eps_ell));
    }
    if !(0.0 < params.s1 && params.s1 < params.s2 && params.s2 < 1.0) || !(params.r > 0.0) {
        return domain("need 0 < s₁ < s₂ < 1 and r > 0");
    }
    let a = w.a;
    let top = n - 1;
    let nf = n as f64;
    let big = sched.rho * a;
    let mut notes = Vec::new();

    let bj = big_jumps_above(traj, big, w.t4, w.t - 1);
    let (record_times, record_jumps) = record_times(traj, sched.rho, w.t4, w.t - 1)?;
    let surpass = surpass_times(traj, sched.rho, w.t4, w.t - 1)?;
    let big_t = record_times.iter().rev().find(|&&s| s < w.t1).map_or(0, |s| s + 1);
    let tau1 = tau1(traj, sched, &w);
    let tau2 = tau2(traj, sched, &w);
    let tau3 = tau3(&surpass, sched, &w);
    let diameter: Vec<f64> = (w.t4..=w.t)
        .map(|s| {
            let p = traj.positions(s);
            p[n - 1] - p[0]
        })
        .collect();
    let maxj = max_jumps(traj, w.t);
    let dl = w.ceil_ell(sched.delta);
    let (win_lo, win_hi) = (w.t2 + dl, w.t1.saturating_sub(dl));
    let t_in_window = big_t >= win_lo && big_t <= win_hi;
    let small_pop = nf.powf(1.0 - sched.gamma);

    // A1
    let l_eta_t = l_count(traj.positions(w.t), sched.eta, a);
    let a1 = Flag::of(l_eta_t as f64 >= nf - small_pop, Witness::Value { value: l_eta_t as f64, bound: nf - small_pop });

    // A2, A2'
    let anc = sample_ancestry(traj, sample, w.t);
    let a2 = coalescence_event(&anc, win_lo, win_hi, params.eps_ell, top);
    let a2_prime = coalescence_event(
        &anc,
        w.t2 + w.ceil_ell(params.s1),
        w.t2 + w.ceil_ell(params.s2),
        params.eps_ell,
        top,
    );

    // A3, A4
    let (a3, a4, leader_tribe_t) = if big_t == 0 {
        (Flag::no(note("T = 0")), Flag::undefined("T = 0"), None)
    } else {
        let anc_t = ancestors_at(traj, w.t, big_t);
        let tribe = anc_t.iter().filter(|&&r| r as usize == top).count();
        let a3 = if !t_in_window {
            Flag::no(Witness::Time { time: big_t })
        } else {
            Flag::of(tribe as f64 >= nf - small_pop, Witness::Value { value: tribe as f64, bound: nf - small_pop })
        };
        let t_eps = big_t + params.eps_ell;
        let a4 = if t_eps > w.t {
            Flag::undefined("T + ε_Nℓ_N beyond t")
        } else {
            let from_leader = ancestors_at(traj, t_eps, big_t);
            let counts = crate::genealogy::descendant_counts(traj, t_eps, w.t);
            let (mut best, mut arg) = (0usize, 0usize);
            for (i, &r) in from_leader.iter().enumerate() {
                if r as usize == top && counts[i] > best {
                    best = counts[i];
                    arg = i;
                }
            }
            let bound = sched.nu * nf;
            let wit = if best as f64 <= bound {
                Witness::Value { value: best as f64, bound }
            } else {
                Witness::Particle { rank: arg, time: t_eps }
            };
            Flag::of(best as f64 <= bound, wit)
        };
        (a3, a4, Some(tribe))
    };

    // B1, B2
    let pos_t1 = traj.positions(w.t1);
    let r_c1 = r_count(pos_t1, sched.c1(), a);
    let b1 = {
        let cap = ((n - 1) as f64).min(2.0 * nf.powf(1.0 - sched.delta));
        if (r_c1 as f64) > cap {
            Flag::no(Witness::Value { value: r_c1 as f64, bound: cap })
        } else if pos_t1[n - r_c1 - 1] > pos_t1[n - r_c1] - sched.c2() * a {
            Flag::no(Witness::Particle { rank: n - r_c1 - 1, time: w.t1 })
        } else if !t_in_window {
            Flag::no(Witness::Time { time: big_t })
        } else {
            let anc1 = ancestors_at(traj, w.t1, big_t);
            match (0..n).find(|&j| (anc1[j] as usize == top) != (j >= n - r_c1)) {
                Some(j) => Flag::no(Witness::Particle { rank: j, time: w.t1 }),
                None => Flag::yes(Witness::Time { time: big_t }),
            }
        }
    };
    let b2 = {
        let anc = ancestors_at(traj, w.t, w.t1);
        let outside = anc.iter().filter(|&&r| (r as usize) < n - r_c1.min(n)).count();
        Flag::of(outside as f64 <= small_pop, Witness::Value { value: outside as f64, bound: small_pop })
    };

    // C1
    let c1 = match tau1 {
        Some(s) if s <= w.t1 => Flag::yes(Witness::Time { time: s }),
        Some(s) => Flag::no(Witness::Time { time: s }),
        None => Flag::no(note("τ₁ = none")),
    };
    // C2
    let c2 = match near_leader_jump(traj, w.t3, w.t - 1, sched.c3() * a, scaled(2.0, sched.c2(), a)) {
        Some(j) => Flag::no(Witness::Jump { jump: j }),
        None => Flag::yes(Witness::None),
    };
    // C3
    let c3 = match c3_violation(traj, &w, big, &bj) {
        Some((first, second)) => Flag::no(Witness::JumpPair { first, second }),
        None => Flag::yes(Witness::None),
    };
    // C4
    let (worst, wr, ws) = c4_worst(traj, &w, big);
    let c4_bound = sched.c1() * a;
    let c4 = if worst <= c4_bound {
        Flag::yes(Witness::Value { value: worst.max(0.0), bound: c4_bound })
    } else {
        Flag::no(Witness::Particle { rank: wr, time: ws })
    };
    // C5
    let c5 = match bj.windows(2).find(|p| p[0].time == p[1].time) {
        Some(p) => Flag::no(Witness::JumpPair { first: p[0], second: p[1] }),
        None => Flag::yes(Witness::None),
    };
    // C6
    let hi6 = w.t1 + dl;
    if hi6 > w.t - 1 {
        notes.push(format!("C6 window end {hi6} clipped to t − 1 = {}", w.t - 1));
    }
    let c6 = match first_above(traj, big, w.t2, w.t2 + dl)
        .or_else(|| first_above(traj, big, w.t1.saturating_sub(dl), hi6.min(w.t - 1)))
    {
        Some(j) => Flag::no(Witness::Jump { jump: j }),
        None => Flag::yes(Witness::None),
    };
    // C7
    let c7 = Flag::of(bj.len() as f64 <= sched.k, Witness::Value { value: bj.len() as f64, bound: sched.k });

    // D1
    let d1 = match near_leader_jump(traj, w.t3, w.t - 1, sched.c4() * a, scaled(3.0, sched.c3(), a)) {
        Some(j) => Flag::no(Witness::Jump { jump: j }),
        None => Flag::yes(Witness::None),
    };
    // D2
    let c5l = sched.c5() * w.ell as f64;
    let d2 = {
        let thr = scaled(2.0, sched.c4(), a);
        let last = w.t1 as f64 - c5l;
        let mut fail = None;
        if last >= w.t3 as f64 {
            for s in w.t3..=Window::floor_time(last) {
                let end = Window::floor_time(s as f64 + c5l);
                if max_in(&maxj, s, end).0 <= thr {
                    fail = Some(s);
                    break;
                }
            }
        }
        match fail {
            Some(s) => Flag::no(Witness::Time { time: s }),
            None => Flag::yes(Witness::None),
        }
    };
    // D3
    let d3 = match first_above(traj, scaled(2.0, sched.c6(), a), w.t2, w.t2 + w.ell.div_ceil(2)) {
        Some(j) => Flag::yes(Witness::Jump { jump: j }),
        None => Flag::no(Witness::None),
    };
    // D4
    let d4_lo = w.t2.saturating_sub(w.ceil_ell(sched.c5()));
    if d4_lo < w.t4 {
        notes.push(format!("D4 window start {d4_lo} clipped to t₄ = {}", w.t4));
    }
    let d4 = match first_above(traj, sched.c6() * a, d4_lo.max(w.t4), w.t2) {
        Some(j) => Flag::no(Witness::Jump { jump: j }),
        None => Flag::yes(Witness::None),
    };
    // D5
    let d5 = match tau2 {
        None => Flag::yes(note("τ₂ = none")),
        Some(t2s) => {
            let lo_x = scaled(2.0, sched.c4(), a);
            let hi_x = lo_x + scaled(3.0, sched.c3(), a);
            let end = Window::floor_time(t2s as f64 + c5l).min(w.t - 1);
            let hit = big_jumps_above(traj, lo_x, t2s, end).into_iter().find(|j| j.value <= hi_x);
            match hit {
                Some(j) => Flag::no(Witness::Jump { jump: j }),
                None => Flag::yes(Witness::Time { time: t2s }),
            }
        }
    };

    // G
    let g = {
        let lo = w.t2 + w.ceil_ell(params.s1);
        let hi = (w.t2 + w.ceil_ell(params.s2)).saturating_sub(1);
        let b_prime = if lo <= hi { big_jumps_above(traj, (params.r + 3.0) * a, lo, hi) } else { Vec::new() };
        if b_prime.len() != 1 {
            Flag::no(Witness::Value { value: b_prime.len() as f64, bound: 1.0 })
        } else {
            let only = b_prime[0];
            let other = big_jumps_above(traj, a, w.t3, w.t1 - 1).into_iter().find(|j| {
                !(j.time == only.time && j.rank == only.rank && j.branch == only.branch)
            });
            match other {
                Some(j) => Flag::no(Witness::Jump { jump: j }),
                None => Flag::yes(Witness::Jump { jump: only }),
            }
        }
    };

    Ok(EventReport {
        window: w,
        eps_ell: params.eps_ell,
        schedule: *sched,
        regime: sched.regime(),
        big_threshold: big,
        big_jumps: bj,
        record_times,
        record_jumps,
        surpass_times: surpass,
        big_t,
        tau1,
        tau2,
        tau3,
        diameter,
        l_eta_t,
        r_c1_t1: r_c1,
        leader_tribe_t,
        flags: Flags { a1, a2, a2_prime, a3, a4, b1, b2, c1, c2, c3, c4, c5, c6, c7, d1, d2, d3, d4, d5, g },
        notes,
    })
}
