//! Brute-force transcription of every event, for cross-checking on small `N`.
//!
//! Each flag is computed by enumerating its quantifiers literally, using the
//! genealogy primitives for descendants and paths. Cost is polynomial of high
//! degree; intended for `N ≤ 32` and windows of a few `ℓ_N`.

use crate::error::Result;
use crate::events::{scaled, EventParams, Window};
use crate::genealogy::{ancestor_index, descendants, descendants_branch, path};
use crate::schedule::ConstantSchedule;
use crate::trajectory::Trajectory;

/// `(name, value)` for every event, in the order of [`crate::events::Flags::iter`].
pub type NaiveFlags = Vec<(&'static str, Option<bool>)>;

struct Ctx<'a> {
    traj: &'a Trajectory,
    w: Window,
    n: usize,
    big: f64,
}

impl Ctx<'_> {
    fn x(&self, i: usize, s: u32) -> f64 {
        self.traj.position(i, s)
    }
    fn jump(&self, i: usize, b: u8, s: u32) -> f64 {
        self.traj.jump(i, b, s)
    }
    fn lead(&self, s: u32) -> f64 {
        self.x(self.n - 1, s)
    }
    fn d(&self, s: u32) -> f64 {
        self.lead(s) - self.x(0, s)
    }
    /// All `(i, b, s)` with `s` in the given inclusive range, `s ≤ t − 1`.
    fn triples(&self, s1: u32, s2: u32) -> Vec<(usize, u8, u32)> {
        let mut v = Vec::new();
        for s in s1..=s2.min(self.w.t - 1) {
            for i in 0..self.n {
                for b in 1..=2u8 {
                    v.push((i, b, s));
                }
            }
        }
        v
    }
    fn is_big(&self, i: usize, b: u8, s: u32) -> bool {
        self.jump(i, b, s) > self.big
    }
    fn in_s(&self, s: u32) -> bool {
        (0..self.n).any(|k| {
            (1..=2u8).any(|b| {
                self.is_big(k, b, s) && descendants_branch(self.traj, k, b, s, s + 1).unwrap().contains(&(self.n - 1))
            })
        })
    }
    fn in_s_hat(&self, s: u32) -> bool {
        (0..self.n).any(|k| (1..=2u8).any(|b| self.is_big(k, b, s) && self.x(k, s) + self.jump(k, b, s) > self.lead(s)))
    }
}

/// `max{i ∈ [N] : 𝒳_i(n) ≤ 𝒳_1(n) + r a}` by a linear scan.
fn l_naive(traj: &Trajectory, n: u32, r: f64) -> usize {
    let a = traj.a();
    let mut best = 0;
    for i in 1..=traj.n() {
        if traj.position(i - 1, n) <= traj.position(0, n) + r * a {
            best = i;
        }
    }
    best
}

/// `max{i ∈ [N] : 𝒳_{N−i+1}(n) ≥ 𝒳_N(n) − ε a}` by a linear scan.
fn r_naive(traj: &Trajectory, n: u32, eps: f64) -> usize {
    let a = traj.a();
    let nn = traj.n();
    let mut best = 0;
    for i in 1..=nn {
        if traj.position(nn - i, n) >= traj.position(nn - 1, n) - eps * a {
            best = i;
        }
    }
    best
}

fn coalescence(c: &Ctx, sample: &[usize], lo: u32, hi: u32, eps_ell: u32) -> bool {
    (lo..=hi).any(|tt| {
        let all_leader = sample.iter().all(|&p| ancestor_index(c.traj, p, c.w.t, tt).unwrap() == c.n - 1);
        if !all_leader || tt + eps_ell > c.w.t {
            return false;
        }
        let anc: Vec<usize> =
            sample.iter().map(|&p| ancestor_index(c.traj, p, c.w.t, tt + eps_ell).unwrap()).collect();
        (0..anc.len()).all(|i| (0..anc.len()).all(|j| i == j || anc[i] != anc[j]))
    })
}

fn near_jump(c: &Ctx, zmin: f64, width: f64) -> bool {
    c.triples(c.w.t3, c.w.t - 1).into_iter().any(|(i, b, s)| {
        let z = c.lead(s) - c.x(i, s);
        let x = c.jump(i, b, s);
        z >= zmin && x > z - width && x <= z + width
    })
}

/// Evaluate every event by exhaustive enumeration.
pub fn naive_flags(
    traj: &Trajectory,
    sched: &ConstantSchedule,
    t: u32,
    sample: &[usize],
    params: &EventParams,
) -> Result<NaiveFlags> {
    let w = Window::new(traj, t)?;
    let n = traj.n();
    let a = w.a;
    let c = Ctx { traj, w, n, big: sched.rho * a };
    let nf = n as f64;
    let top = n - 1;

    let b_n: Vec<(usize, u8, u32)> =
        c.triples(w.t4, w.t - 1).into_iter().filter(|&(i, b, s)| c.is_big(i, b, s)).collect();
    let mut big_t = 0;
    for s in w.t4..w.t1 {
        if c.in_s(s) {
            big_t = s + 1;
        }
    }
    let dl = (sched.delta * w.ell as f64).ceil() as u32;
    let in_window = |tt: u32| tt as i64 >= (w.t2 + dl) as i64 && tt as i64 <= w.t1 as i64 - dl as i64;
    let small = nf.powf(1.0 - sched.gamma);

    let a1 = l_naive(traj, w.t, sched.eta) as f64 >= nf - small;
    let a2 = coalescence(&c, sample, w.t2 + dl, w.t1.saturating_sub(dl), params.eps_ell);
    let s1l = (params.s1 * w.ell as f64).ceil() as u32;
    let s2l = (params.s2 * w.ell as f64).ceil() as u32;
    let a2p = coalescence(&c, sample, w.t2 + s1l, w.t2 + s2l, params.eps_ell);

    let (a3, a4) = if big_t == 0 {
        (Some(false), None)
    } else {
        let tribe = descendants(traj, top, big_t, w.t)?.len();
        let a3 = in_window(big_t) && tribe as f64 >= nf - small;
        let te = big_t + params.eps_ell;
        let mut worst = 0usize;
        for i in descendants(traj, top, big_t, te)? {
            worst = worst.max(descendants(traj, i, te, w.t)?.len());
        }
        (Some(a3), Some(worst as f64 <= sched.nu * nf))
    };

    let r = r_naive(traj, w.t1, sched.c1());
    let b1 = {
        let cond1 = (r as f64) <= ((n - 1) as f64).min(2.0 * nf.powf(1.0 - sched.delta));
        let cond2 = cond1 && c.x(n - r - 1, w.t1) <= c.x(n - r, w.t1) - sched.c2() * a;
        let cond3 = in_window(big_t);
        let cond4 = cond3 && {
            let tribe = descendants(traj, top, big_t, w.t1)?;
            tribe == (n - r..n).collect::<Vec<_>>()
        };
        cond1 && cond2 && cond3 && cond4
    };
    let b2 = {
        let mut total = 0usize;
        for j in 0..n.saturating_sub(r) {
            total += descendants(traj, j, w.t1, w.t)?.len();
        }
        total as f64 <= small
    };

    let tau1 = (w.t2 + 1..=w.t).find(|&s| c.lead(s) > c.x(n - 2, s) + scaled(2.0, sched.c3(), a));
    let c1 = matches!(tau1, Some(s) if s >= w.t2 + 1 && s <= w.t1);
    let c2 = !near_jump(&c, sched.c3() * a, scaled(2.0, sched.c2(), a));

    let mut c3 = true;
    'outer: for &(k1, b1j, s1) in &b_n {
        for s2 in s1 + 1..=(s1 + w.ell + 1).min(w.t) {
            for k2 in descendants_branch(traj, k1, b1j, s1, s2)? {
                let p = path(traj, k1, s1, k2, s2)?;
                let bigs: Vec<_> = p.iter().filter(|st| st.time >= w.t4 && st.jump > c.big).collect();
                let only_first = bigs.len() == 1 && bigs[0].rank == k1 && bigs[0].branch == b1j && bigs[0].time == s1;
                if !only_first {
                    c3 = false;
                    break 'outer;
                }
            }
        }
    }

    let mut c4 = true;
    'c4: for s1 in w.t4..w.t {
        for k1 in 0..n {
            for s2 in s1 + 1..=w.t {
                for k2 in descendants(traj, k1, s1, s2)? {
                    let mut sum = 0.0;
                    for st in path(traj, k1, s1, k2, s2)? {
                        if st.jump <= c.big {
                            sum += st.jump;
                        }
                    }
                    if sum > sched.c1() * a {
                        c4 = false;
                        break 'c4;
                    }
                }
            }
        }
    }

    let c5 = (w.t4..w.t).all(|s| b_n.iter().filter(|j| j.2 == s).count() <= 1);
    let c6 = !c
        .triples(w.t2, w.t2 + dl)
        .into_iter()
        .chain(c.triples(w.t1.saturating_sub(dl), w.t1 + dl))
        .any(|(i, b, s)| c.is_big(i, b, s));
    let c7 = b_n.len() as f64 <= sched.k;

    let d1 = !near_jump(&c, sched.c4() * a, scaled(3.0, sched.c3(), a));
    let c5l = sched.c5() * w.ell as f64;
    let d2 = {
        let mut ok = true;
        let mut s = w.t3;
        while s as f64 <= w.t1 as f64 - c5l {
            let mut found = false;
            let mut hs = s;
            while hs as f64 <= s as f64 + c5l && hs < w.t {
                found |= (0..n).any(|k| (1..=2u8).any(|b| c.jump(k, b, hs) > scaled(2.0, sched.c4(), a)));
                hs += 1;
            }
            ok &= found;
            s += 1;
        }
        ok
    };
    let half = w.ell.div_ceil(2);
    let d3 = c.triples(w.t2, w.t2 + half).into_iter().any(|(i, b, s)| c.jump(i, b, s) > scaled(2.0, sched.c6(), a));
    let c5c = (sched.c5() * w.ell as f64).ceil() as u32;
    let d4 = !c
        .triples(w.t2.saturating_sub(c5c).max(w.t4), w.t2)
        .into_iter()
        .any(|(i, b, s)| c.jump(i, b, s) > sched.c6() * a);
    let tau2 = (w.t2..=w.t).find(|&s| c.d(s) <= scaled(1.5, sched.c4(), a));
    let d5 = match tau2 {
        None => true,
        Some(t2s) => {
            let lo = scaled(2.0, sched.c4(), a);
            let hi = lo + scaled(3.0, sched.c3(), a);
            let mut clean = true;
            let mut s = t2s;
            while s as f64 <= t2s as f64 + c5l && s < w.t {
                for i in 0..n {
                    for b in 1..=2u8 {
                        let x = c.jump(i, b, s);
                        clean &= !(x > lo && x <= hi);
                    }
                }
                s += 1;
            }
            clean
        }
    };

    let g = {
        let lo = w.t2 + s1l;
        let hi = w.t2 + s2l;
        let b_prime: Vec<(usize, u8, u32)> = (lo..hi)
            .flat_map(|s| c.triples(s, s))
            .filter(|&(i, b, s)| c.jump(i, b, s) > (params.r + 3.0) * a)
            .collect();
        b_prime.len() == 1
            && c.triples(w.t3, w.t1 - 1)
                .into_iter()
                .filter(|tr| !b_prime.contains(tr))
                .all(|(i, b, s)| c.jump(i, b, s) <= a)
    };

    Ok(vec![
        ("A1", Some(a1)),
        ("A2", Some(a2)),
        ("A2'", Some(a2p)),
        ("A3", a3),
        ("A4", a4),
        ("B1", Some(b1)),
        ("B2", Some(b2)),
        ("C1", Some(c1)),
        ("C2", Some(c2)),
        ("C3", Some(c3)),
        ("C4", Some(c4)),
        ("C5", Some(c5)),
        ("C6", Some(c6)),
        ("C7", Some(c7)),
        ("D1", Some(d1)),
        ("D2", Some(d2)),
        ("D3", Some(d3)),
        ("D4", Some(d4)),
        ("D5", Some(d5)),
        ("G", Some(g)),
    ])
}

/// `𝐒_N` and `Ŝ_N` over `[t₄, t−1]`, `T`, `τ₁`, `τ₂` by enumeration.
pub fn naive_sets(traj: &Trajectory, sched: &ConstantSchedule, t: u32) -> Result<(Vec<u32>, Vec<u32>, u32)> {
    let w = Window::new(traj, t)?;
    let c = Ctx { traj, w, n: traj.n(), big: sched.rho * w.a };
    let s: Vec<u32> = (w.t4..w.t).filter(|&s| c.in_s(s)).collect();
    let sh: Vec<u32> = (w.t4..w.t).filter(|&s| c.in_s_hat(s)).collect();
    let big_t = s.iter().filter(|&&x| x < w.t1).max().map_or(0, |x| x + 1);
    Ok((s, sh, big_t))
}
