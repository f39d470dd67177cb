//! Counter-based keyed randomness.
//!
//! Every random quantity is a pure function of a 128-bit key. Keys are built
//! by absorbing 64-bit words into a two-lane state; each absorb step is a
//! bijection of the state for a fixed word, so distinct parents never collide
//! on the same child word. Tree nodes of the branching random walk absorb
//! their branch labels, which lets both engine constructions read the same
//! jump `Y_{j,u}` without sharing any mutable generator.

use serde::{Deserialize, Serialize};

use crate::tails::TailLaw;

const G1: u64 = 0x9e37_79b9_7f4a_7c15;
const G2: u64 = 0xd1b5_4a32_d192_ed03;
const G3: u64 = 0xabc9_8388_fb8f_ac03;
const G4: u64 = 0x8cb9_2ba7_2f3d_8dd7;

/// SplitMix64 finalizer; a bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Separate key domains so different consumers never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Jump = 1,
    Sample = 2,
    MonteCarlo = 3,
    Threshold = 4,
}

/// A 128-bit key; the digest of a node of the keyed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeKey {
    pub hi: u64,
    pub lo: u64,
}

impl NodeKey {
    /// Key at the start of a domain for a given seed.
    pub fn domain(domain: Domain, seed: u64) -> Self {
        NodeKey { hi: mix64(domain as u64 ^ G3), lo: G4 }.absorb(seed)
    }

    /// Root of the jump tree for lineage `j` (1-based) of one replicate.
    pub fn root(seed: u64, replicate: u64, lineage: u32) -> Self {
        Self::domain(Domain::Jump, seed).absorb(replicate).absorb(lineage as u64)
    }

    /// Fold one word into the key.
    #[inline]
    pub fn absorb(self, w: u64) -> Self {
        let hi = mix64(self.hi ^ mix64(self.lo ^ w.wrapping_mul(G1).wrapping_add(G2)));
        let lo = mix64(self.lo.wrapping_add(hi) ^ w.rotate_left(29).wrapping_add(G3));
        NodeKey { hi, lo }
    }

    /// Key of child `u b` of this node, `b ∈ {1, 2}`.
    #[inline]
    pub fn child(self, branch: u8) -> Self {
        self.absorb(branch as u64)
    }

    /// Finalized 64 output bits.
    #[inline]
    pub fn bits(self) -> u64 {
        mix64(self.hi ^ mix64(self.lo ^ G4))
    }

    /// Uniform in the open interval `(0, 1)`.
    #[inline]
    pub fn uniform(self) -> f64 {
        ((self.bits() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Digest as one 128-bit integer.
    pub fn digest(self) -> u128 {
        ((self.hi as u128) << 64) | self.lo as u128
    }

    /// Inverse of [`NodeKey::digest`].
    pub fn from_digest(d: u128) -> Self {
        NodeKey { hi: (d >> 64) as u64, lo: d as u64 }
    }
}

/// Explicit tree coordinate `(replicate, j, u)` of a jump `Y_{j,u}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JumpKey {
    pub replicate: u64,
    /// Lineage `j ∈ [N]`, 1-based.
    pub lineage: u32,
    /// Branch labels `u ∈ {1,2}^n`, root first.
    pub path: Vec<u8>,
}

impl JumpKey {
    /// Generation `n = |u|`.
    pub fn generation(&self) -> usize {
        self.path.len()
    }

    /// Node digest obtained by folding the path from the root.
    pub fn node_key(&self, seed: u64) -> NodeKey {
        self.path.iter().fold(NodeKey::root(seed, self.replicate, self.lineage), |k, &b| k.child(b))
    }
}

/// The jump `Y_{j,u}` for a key: `sample_jump` applied to the keyed uniform.
pub fn jump_value(key: &JumpKey, law: &TailLaw, seed: u64) -> f64 {
    law.jump_from_uniform(key.node_key(seed).uniform())
}

/// Sequential counter stream derived from a key.
#[derive(Debug, Clone)]
pub struct Stream {
    key: NodeKey,
    counter: u64,
}

impl Stream {
    pub fn new(key: NodeKey) -> Self {
        Stream { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = self.key.absorb(self.counter).bits();
        self.counter += 1;
        out
    }

    /// Uniform in `(0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased integer in `[0, n)` by multiply-and-reject.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folded_key_matches_incremental() {
        let mut k = NodeKey::root(7, 3, 5);
        let mut path = Vec::new();
        for step in 0..40u32 {
            let b = if step % 3 == 0 { 2 } else { 1 };
            path.push(b);
            k = k.child(b);
            let jk = JumpKey { replicate: 3, lineage: 5, path: path.clone() };
            assert_eq!(jk.node_key(7), k);
        }
    }

    #[test]
    fn deterministic_and_distinct() {
        let law = TailLaw::pareto(2.0).unwrap();
        let key = JumpKey { replicate: 0, lineage: 1, path: vec![1, 2, 1] };
        assert_eq!(jump_value(&key, &law, 0), jump_value(&key, &law, 0));
        let other = JumpKey { path: vec![1, 2, 2], ..key.clone() };
        assert_ne!(jump_value(&key, &law, 0), jump_value(&other, &law, 0));
        assert_ne!(jump_value(&key, &law, 0), jump_value(&key, &law, 1));
        assert!(jump_value(&key, &law, 0) >= 0.0);
    }

    #[test]
    fn digest_round_trip() {
        let k = NodeKey::root(1, 2, 3).child(2);
        assert_eq!(NodeKey::from_digest(k.digest()), k);
    }

    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }

    #[test]
    fn sibling_branches_uncorrelated() {
        let n = 100_000;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for i in 0..n as u64 {
            let parent = NodeKey::root(11, i, 1 + (i % 7) as u32).child(1);
            a.push(parent.child(1).uniform());
            b.push(parent.child(2).uniform());
        }
        let (ra, rb) = (ranks(&a), ranks(&b));
        let mean = (n as f64 - 1.0) / 2.0;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (x, y) = (ra[i] - mean, rb[i] - mean);
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let rho = sab / (saa * sbb).sqrt();
        assert!(rho.abs() < 0.01, "rank correlation {rho}");
    }

    #[test]
    fn uniform_moments() {
        let mut s = Stream::new(NodeKey::domain(Domain::MonteCarlo, 5));
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let u = s.next_f64();
            assert!(u > 0.0 && u < 1.0);
            sum += u;
            sum2 += u * u;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!((mean - 0.5).abs() < 4.0 * (1.0 / 12.0 / n as f64).sqrt());
        assert!((var - 1.0 / 12.0).abs() < 1e-3);
    }

    #[test]
    fn below_is_uniform() {
        let mut s = Stream::new(NodeKey::domain(Domain::Sample, 9));
        let n = 7u64;
        let draws = 70_000;
        let mut counts = [0u32; 7];
        for _ in 0..draws {
            counts[s.below(n) as usize] += 1;
        }
        let p = 1.0 / n as f64;
        let se = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 4.0 * se);
        }
    }
}
