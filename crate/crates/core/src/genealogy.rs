//! Ancestry queries: ancestors, descendant sets, paths, samples and
//! coalescence profiles.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::{Domain, NodeKey, Stream};
use crate::trajectory::Trajectory;

fn check_time(traj: &Trajectory, s: u32) -> Result<()> {
    if s > traj.t() {
        return domain(format!("time {s} outside [0, {}]", traj.t()));
    }
    Ok(())
}

fn check_rank(traj: &Trajectory, i: usize) -> Result<()> {
    if i >= traj.n() {
        return domain(format!("rank {i} outside [0, {})", traj.n()));
    }
    Ok(())
}

/// `ζ_{i,m}(n)`: rank at time `n` of the ancestor of `(i, m)`.
pub fn ancestor_index(traj: &Trajectory, i: usize, m: u32, n: u32) -> Result<usize> {
    check_time(traj, m)?;
    check_rank(traj, i)?;
    if n > m {
        return domain(format!("ancestor time {n} after {m}"));
    }
    let mut r = i;
    for s in (n + 1..=m).rev() {
        r = traj.parent(r, s);
    }
    Ok(r)
}

/// `ζ_{·,m}(n)` for every rank at time `m`, in `O(N (m − n))`.
pub fn ancestors_at(traj: &Trajectory, m: u32, n: u32) -> Vec<u32> {
    let mut anc: Vec<u32> = (0..traj.n() as u32).collect();
    for s in (n + 1..=m).rev() {
        let parents = &traj.generations[s as usize].parents;
        for a in anc.iter_mut() {
            *a = parents[*a as usize];
        }
    }
    anc
}

/// `|𝒩_{i,n}(k)|` for every rank `i` at time `n`.
pub fn descendant_counts(traj: &Trajectory, n: u32, k: u32) -> Vec<usize> {
    let mut counts = vec![0usize; traj.n()];
    for a in ancestors_at(traj, k, n) {
        counts[a as usize] += 1;
    }
    counts
}

fn forward_mask(traj: &Trajectory, mut alive: Vec<bool>, from: u32, k: u32) -> Vec<usize> {
    for s in from + 1..=k {
        let parents = &traj.generations[s as usize].parents;
        alive = parents.iter().map(|&p| alive[p as usize]).collect();
    }
    alive.iter().enumerate().filter(|(_, &a)| a).map(|(j, _)| j).collect()
}

/// `𝒩_{i,n}(k)`: ranks at time `k` descending from `(i, n)`, ascending.
pub fn descendants(traj: &Trajectory, i: usize, n: u32, k: u32) -> Result<Vec<usize>> {
    check_time(traj, k)?;
    check_rank(traj, i)?;
    if n > k {
        return domain(format!("descendant time {k} before {n}"));
    }
    let mut alive = vec![false; traj.n()];
    alive[i] = true;
    Ok(forward_mask(traj, alive, n, k))
}

/// `𝒩^b_{i,n}(k)`: descendants at `k > n` through the offspring `b` of `(i, n)`.
pub fn descendants_branch(traj: &Trajectory, i: usize, b: u8, n: u32, k: u32) -> Result<Vec<usize>> {
    check_time(traj, k)?;
    check_rank(traj, i)?;
    if n >= k {
        return domain(format!("branch descendants need k > n, got n={n} k={k}"));
    }
    let g = &traj.generations[n as usize + 1];
    let alive: Vec<bool> = g.parents.iter().zip(&g.branches).map(|(&p, &bb)| p as usize == i && bb == b).collect();
    Ok(forward_mask(traj, alive, n + 1, k))
}

/// One element `(i_j, b_j, n + j)` of a path, with its jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub rank: usize,
    pub branch: u8,
    pub time: u32,
    pub jump: f64,
}

/// `P_{i0,n}^{ik,nk}`: the jumps along the ancestral line from `(i0, n)` to
/// `(ik, nk)`, oldest first; empty when `(i0, n)` is not an ancestor.
pub fn path(traj: &Trajectory, i0: usize, n: u32, ik: usize, nk: u32) -> Result<Vec<PathStep>> {
    check_time(traj, nk)?;
    check_rank(traj, i0)?;
    check_rank(traj, ik)?;
    if n >= nk {
        return domain(format!("path needs n < nk, got n={n} nk={nk}"));
    }
    let mut steps = Vec::with_capacity((nk - n) as usize);
    let mut r = ik;
    for s in (n + 1..=nk).rev() {
        let (p, b) = (traj.parent(r, s), traj.branch(r, s));
        steps.push(PathStep { rank: p, branch: b, time: s - 1, jump: traj.jump(p, b, s - 1) });
        r = p;
    }
    if r != i0 {
        return Ok(Vec::new());
    }
    steps.reverse();
    Ok(steps)
}

/// `M` distinct ranks at time `t`, uniform over `M`-subsets.
///
/// Uses its own key domain, independent of the jump stream.
pub fn sample_uniform(traj: &Trajectory, t: u32, m: usize, seed: u64) -> Result<Vec<usize>> {
    check_time(traj, t)?;
    sample_ranks(traj.n(), m, NodeKey::domain(Domain::Sample, seed).absorb(traj.header.replicate).absorb(t as u64))
}

/// Partial Fisher–Yates draw of `m` of `n` ranks, returned ascending.
pub fn sample_ranks(n: usize, m: usize, key: NodeKey) -> Result<Vec<usize>> {
    if m == 0 || m > n {
        return domain(format!("sample size {m} outside [1, {n}]"));
    }
    let mut stream = Stream::new(key);
    let mut pool: Vec<usize> = (0..n).collect();
    for k in 0..m {
        let j = k + stream.below((n - k) as u64) as usize;
        pool.swap(k, j);
    }
    let mut out = pool[..m].to_vec();
    out.sort_unstable();
    Ok(out)
}

/// Genealogy of a sample at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceProfile {
    pub t: u32,
    pub sample: Vec<usize>,
    /// Time of the most recent common ancestor of the whole sample.
    pub mrca_time: Option<u32>,
    pub mrca_rank: Option<usize>,
    /// Latest common-ancestor time of each pair; `t` on the diagonal.
    pub pairwise: Vec<Vec<Option<u32>>>,
    /// Largest minus smallest off-diagonal pairwise time, when all pairs coalesce.
    pub star_spread: Option<u32>,
}

/// Pairwise and whole-sample coalescence times by synchronized backward walks.
pub fn coalescence_profile(traj: &Trajectory, sample: &[usize], t: u32) -> Result<CoalescenceProfile> {
    check_time(traj, t)?;
    let m = sample.len();
    if m == 0 {
        return domain("empty sample");
    }
    for (k, &i) in sample.iter().enumerate() {
        check_rank(traj, i)?;
        if sample[..k].contains(&i) {
            return domain(format!("sample rank {i} repeated"));
        }
    }
    let mut pairwise = vec![vec![None; m]; m];
    let mut lines: Vec<usize> = sample.to_vec();
    let mut open = m * (m - 1) / 2;
    for a in 0..m {
        pairwise[a][a] = Some(t);
    }
    let mut s = t;
    let mut mrca = if m == 1 { Some((t, sample[0])) } else { None };
    loop {
        if open > 0 {
            for a in 0..m {
                for b in a + 1..m {
                    if pairwise[a][b].is_none() && lines[a] == lines[b] {
                        pairwise[a][b] = Some(s);
                        pairwise[b][a] = Some(s);
                        open -= 1;
                    }
                }
            }
            if open == 0 {
                mrca = Some((s, lines[0]));
            }
        }
        if open == 0 || s == 0 {
            break;
        }
        for l in lines.iter_mut() {
            *l = traj.parent(*l, s);
        }
        s -= 1;
    }
    let star_spread = if m > 1 && open == 0 {
        let offdiag = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b)));
        let times: Vec<u32> = offdiag.map(|(a, b)| pairwise[a][b].unwrap()).collect();
        Some(times.iter().max().unwrap() - times.iter().min().unwrap())
    } else if m == 1 {
        Some(0)
    } else {
        None
    };
    Ok(CoalescenceProfile {
        t,
        sample: sample.to_vec(),
        mrca_time: mrca.map(|x| x.0),
        mrca_rank: mrca.map(|x| x.1),
        pairwise,
        star_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_direct, run_direct_with, PolicySource, RunConfig};
    use crate::tails::TailLaw;

    fn random(n: u64, t: u32, seed: u64) -> Trajectory {
        run_direct(&RunConfig::new(TailLaw::pareto(1.0).unwrap(), n, t, seed)).unwrap()
    }

    #[test]
    fn ancestor_examples_and_transitivity() {
        let tr = random(8, 12, 1);
        for i in 0..8 {
            assert_eq!(ancestor_index(&tr, i, 5, 5).unwrap(), i);
            assert_eq!(ancestor_index(&tr, i, 6, 5).unwrap(), tr.parent(i, 6));
            for m in 0..=12 {
                for n in 0..=m {
                    for k in n..=m {
                        let via = ancestor_index(&tr, ancestor_index(&tr, i, m, k).unwrap(), k, n).unwrap();
                        assert_eq!(ancestor_index(&tr, i, m, n).unwrap(), via);
                    }
                }
            }
        }
        assert!(ancestor_index(&tr, 8, 3, 1).is_err());
        assert!(ancestor_index(&tr, 0, 13, 1).is_err());
        assert!(ancestor_index(&tr, 0, 3, 4).is_err());
    }

    #[test]
    fn descendants_partition_and_inverse() {
        let tr = random(16, 20, 2);
        for n in [0, 4, 11] {
            for k in n..=20 {
                let mut seen = vec![0; 16];
                for i in 0..16 {
                    let d = descendants(&tr, i, n, k).unwrap();
                    for &j in &d {
                        seen[j] += 1;
                        assert_eq!(ancestor_index(&tr, j, k, n).unwrap(), i);
                    }
                    if k == n {
                        assert_eq!(d, vec![i]);
                    }
                    if k > n {
                        let mut both = descendants_branch(&tr, i, 1, n, k).unwrap();
                        both.extend(descendants_branch(&tr, i, 2, n, k).unwrap());
                        both.sort_unstable();
                        assert_eq!(both, d);
                    }
                }
                assert!(seen.iter().all(|&c| c == 1));
                assert_eq!(descendant_counts(&tr, n, k).iter().sum::<usize>(), 16);
            }
        }
    }

    #[test]
    fn free_growth_doubles() {
        // The leader jumps far ahead once; afterwards nothing moves, so its
        // tribe doubles every step until it fills the population.
        let cfg = RunConfig::new(TailLaw::pareto(1.0).unwrap(), 16, 8, 0);
        let policy = |s: &crate::engine::JumpSite| if s.time == 0 && s.rank == 15 && s.branch == 1 { 1000.0 } else { 0.0 };
        let tr = run_direct_with(&cfg, &mut PolicySource { policy, label: "lead".into() }).unwrap();
        for k in 0..=3 {
            assert_eq!(descendants(&tr, 15, 1, 1 + k).unwrap().len(), 1 << k);
        }
        assert_eq!(descendants(&tr, 15, 1, 5).unwrap().len(), 16);
    }

    #[test]
    fn path_sum_identity() {
        let tr = random(8, 30, 3);
        for j in 0..8 {
            for n in [0u32, 7, 20] {
                let i0 = ancestor_index(&tr, j, 30, n).unwrap();
                let p = path(&tr, i0, n, j, 30).unwrap();
                assert_eq!(p.len(), (30 - n) as usize);
                let sum = p.iter().fold(tr.position(i0, n), |acc, st| acc + st.jump);
                assert_eq!(sum.to_bits(), tr.position(j, 30).to_bits());
                let other = (i0 + 1) % 8;
                if ancestor_index(&tr, j, 30, n).unwrap() != other {
                    assert!(path(&tr, other, n, j, 30).unwrap().is_empty());
                }
            }
            let one = path(&tr, tr.parent(j, 30), 29, j, 30).unwrap();
            assert_eq!(one.len(), 1);
            assert_eq!(one[0].jump, tr.jump(tr.parent(j, 30), tr.branch(j, 30), 29));
        }
    }

    #[test]
    fn sampling() {
        let tr = random(8, 3, 0);
        assert_eq!(sample_uniform(&tr, 3, 8, 1).unwrap(), (0..8).collect::<Vec<_>>());
        assert_eq!(sample_uniform(&tr, 3, 3, 5).unwrap(), sample_uniform(&tr, 3, 3, 5).unwrap());
        assert!(sample_uniform(&tr, 3, 9, 5).is_err());
        let draws = 100_000u64;
        let mut counts = [0u64; 8];
        for seed in 0..draws {
            counts[sample_ranks(8, 1, NodeKey::domain(Domain::Sample, seed)).unwrap()[0]] += 1;
        }
        let p = 1.0 / 8.0;
        let se = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * se, "{counts:?}");
        }
    }

    fn brute_pairwise(tr: &Trajectory, a: usize, b: usize, t: u32) -> Option<u32> {
        (0..=t).rev().find(|&s| ancestor_index(tr, a, t, s).unwrap() == ancestor_index(tr, b, t, s).unwrap())
    }

    #[test]
    fn profile_matches_brute_force() {
        for seed in 0..30 {
            let tr = random(32, 32, seed);
            let sample = sample_uniform(&tr, 32, 5, seed).unwrap();
            let prof = coalescence_profile(&tr, &sample, 32).unwrap();
            for a in 0..5 {
                assert_eq!(prof.pairwise[a][a], Some(32));
                for b in 0..5 {
                    if a != b {
                        assert_eq!(prof.pairwise[a][b], brute_pairwise(&tr, sample[a], sample[b], 32));
                        assert_eq!(prof.pairwise[a][b], prof.pairwise[b][a]);
                    }
                }
            }
            let all: Option<Vec<u32>> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).map(|(a, b)| prof.pairwise[a][b]).collect();
            match all {
                Some(v) => {
                    assert_eq!(prof.mrca_time, v.iter().min().copied());
                    let s = prof.mrca_time.unwrap();
                    assert_eq!(prof.mrca_rank, Some(ancestor_index(&tr, sample[0], 32, s).unwrap()));
                }
                None => assert_eq!(prof.mrca_time, None),
            }
        }
    }

    #[test]
    fn profile_examples() {
        let cfg = RunConfig::new(TailLaw::pareto(1.0).unwrap(), 4, 3, 0);
        let zero = |_: &crate::engine::JumpSite| 0.0;
        let tr = run_direct_with(&cfg, &mut PolicySource { policy: zero, label: "zero".into() }).unwrap();
        // At time 1 the two offspring of lineage 1 are ranks 3 and 2 (siblings).
        let sib = coalescence_profile(&tr, &[2, 3], 1).unwrap();
        assert_eq!(sib.mrca_time, Some(0));
        assert_eq!(sib.star_spread, Some(0));
        let disjoint = coalescence_profile(&tr, &[0, 3], 0).unwrap();
        assert_eq!(disjoint.mrca_time, None);
        assert_eq!(disjoint.star_spread, None);
        let single = coalescence_profile(&tr, &[1], 2).unwrap();
        assert_eq!((single.mrca_time, single.star_spread), (Some(2), Some(0)));
    }
}
