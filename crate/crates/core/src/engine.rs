//! Two constructions of the N-BRW over one keyed jump stream.
//!
//! [`run_direct`] branches and selects on rank arrays, tracking only the
//! lexicographic rank of each particle's tree label. [`run_brw_construction`]
//! grows `N` explicit binary trees, keeps the survivor set `H_n` and compares
//! labels by walking the tree. Both read `Y_{j,u}` from a [`JumpSource`]
//! addressed by the node key of `(j, u)`, so equal outputs test the selection
//! and relabeling logic rather than a shared code path.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::NodeKey;
use crate::tails::{Scales, TailLaw};
use crate::trajectory::{EngineKind, Generation, Header, Jumps, TieRule, Trajectory, FORMAT, VERSION};

/// Largest admitted `a_N · t`, keeping path sums well inside `f64` precision.
pub const MAGNITUDE_CAP: f64 = (1u64 << 50) as f64;
/// Default memory cap for stored trajectories, in bytes.
pub const DEFAULT_MAX_BYTES: u64 = 3 << 30;

/// Parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub law: TailLaw,
    pub n: u64,
    pub t: u32,
    /// Initial positions by lineage; `None` puts every particle at 0.
    pub initial: Option<Vec<f64>>,
    pub seed: u64,
    pub replicate: u64,
    pub tie_rule: TieRule,
    pub max_bytes: u64,
}

impl RunConfig {
    /// Config with defaults for everything but the law, size, horizon and seed.
    pub fn new(law: TailLaw, n: u64, t: u32, seed: u64) -> Self {
        RunConfig { law, n, t, initial: None, seed, replicate: 0, tie_rule: TieRule::default(), max_bytes: DEFAULT_MAX_BYTES }
    }

    /// Validate and return the scales and initial configuration.
    pub fn prepare(&self) -> Result<(Scales, Vec<f64>)> {
        if self.n < 2 {
            return domain(format!("N must be at least 2, got {}", self.n));
        }
        if self.n > u32::MAX as u64 / 2 {
            return Err(Error::Capacity(format!("N = {} exceeds the rank index range", self.n)));
        }
        let scales = Scales::new(&self.law, self.n)?;
        if scales.a * self.t as f64 > MAGNITUDE_CAP {
            return Err(Error::Capacity(format!("a_N * t = {:.3e} exceeds 2^50", scales.a * self.t as f64)));
        }
        let bytes = self.n * (self.t as u64 + 1) * 13;
        if bytes > self.max_bytes {
            return Err(Error::Capacity(format!("trajectory needs about {bytes} bytes, cap is {}", self.max_bytes)));
        }
        let initial = match &self.initial {
            None => vec![0.0; self.n as usize],
            Some(v) if v.len() == self.n as usize && v.iter().all(|x| x.is_finite()) => v.clone(),
            Some(v) => return domain(format!("initial configuration must have {} finite entries, got {}", self.n, v.len())),
        };
        Ok((scales, initial))
    }

    fn header(&self, initial: Vec<f64>, engine: EngineKind, source: &str) -> Header {
        Header {
            format: FORMAT.into(),
            version: VERSION,
            law: self.law,
            n: self.n,
            t: self.t,
            seed: self.seed,
            replicate: self.replicate,
            tie_rule: self.tie_rule,
            engine,
            initial,
            source: source.into(),
        }
    }
}

/// Where a jump is requested: the offspring `σ(rank, time) b`.
#[derive(Debug, Clone, Copy)]
pub struct JumpSite<'a> {
    pub time: u32,
    /// 0-based rank of the parent at `time`.
    pub rank: usize,
    pub branch: u8,
    /// Node key of the offspring `(j, u b)`.
    pub key: NodeKey,
    /// Sorted positions of the parent generation.
    pub positions: &'a [f64],
}

/// Supplier of the jumps `Y_{j,u}`.
///
/// Implementations must return the same value for the same site regardless
/// of call order, so both constructions see one process.
pub trait JumpSource {
    fn jump(&mut self, site: &JumpSite) -> f64;

    /// Short name written into trajectory headers.
    fn name(&self) -> &str;
}

/// The keyed random stream: `sample_jump` of the node key's uniform.
#[derive(Debug, Clone, Copy)]
pub struct KeyedSource {
    pub law: TailLaw,
}

impl JumpSource for KeyedSource {
    #[inline]
    fn jump(&mut self, site: &JumpSite) -> f64 {
        self.law.jump_from_uniform(site.key.uniform())
    }

    fn name(&self) -> &str {
        "keyed"
    }
}

/// Jumps looked up by node digest, 0 when absent; used to replay fixtures.
#[derive(Debug, Clone, Default)]
pub struct TableSource {
    pub table: HashMap<u128, f64>,
    pub label: String,
}

impl JumpSource for TableSource {
    fn jump(&mut self, site: &JumpSite) -> f64 {
        self.table.get(&site.key.digest()).copied().unwrap_or(0.0)
    }

    fn name(&self) -> &str {
        &self.label
    }
}

/// Jumps given by a deterministic function of `(time, rank, branch, positions)`.
pub struct PolicySource<F> {
    pub policy: F,
    pub label: String,
}

impl<F: FnMut(&JumpSite) -> f64> JumpSource for PolicySource<F> {
    fn jump(&mut self, site: &JumpSite) -> f64 {
        (self.policy)(site)
    }

    fn name(&self) -> &str {
        &self.label
    }
}

/// Wraps a source and records every nonzero jump by node digest.
pub struct Recorder<S> {
    pub inner: S,
    pub table: HashMap<u128, f64>,
}

impl<S: JumpSource> Recorder<S> {
    pub fn new(inner: S) -> Self {
        Recorder { inner, table: HashMap::new() }
    }

    /// A [`TableSource`] replaying what was recorded.
    pub fn into_table(self, label: impl Into<String>) -> TableSource {
        TableSource { table: self.table, label: label.into() }
    }
}

impl<S: JumpSource> JumpSource for Recorder<S> {
    fn jump(&mut self, site: &JumpSite) -> f64 {
        let x = self.inner.jump(site);
        if x != 0.0 {
            self.table.insert(site.key.digest(), x);
        }
        x
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}

fn checked_jump(source: &mut dyn JumpSource, site: &JumpSite) -> Result<f64> {
    let x = source.jump(site);
    if !(x >= 0.0 && x.is_finite()) {
        return domain(format!("jump source returned {x} at time {} rank {} branch {}", site.time, site.rank, site.branch));
    }
    Ok(x)
}

/// Lineage order of generation 0 under the tie rule: ascending rank order.
fn initial_order(initial: &[f64], tie: TieRule) -> Vec<usize> {
    let mut order: Vec<usize> = (0..initial.len()).collect();
    order.sort_by(|&a, &b| {
        let by_pos = initial[a].total_cmp(&initial[b]);
        match tie {
            TieRule::LexSmallestWins => by_pos.then(b.cmp(&a)),
            TieRule::LexLargestWins => by_pos.then(a.cmp(&b)),
        }
    });
    order
}

#[derive(Clone, Copy)]
struct Offspring {
    pos: f64,
    lex: u32,
    parent: u32,
    branch: u8,
}

/// One branch-and-select step on rank arrays.
///
/// `lex[i]` is the lexicographic rank of the label of particle `i` among the
/// current generation. Returns the next generation and its `lex` and `keys`.
#[allow(clippy::too_many_arguments)]
fn direct_step(
    time: u32,
    positions: &[f64],
    lex: &[u32],
    keys: &[NodeKey],
    tie: TieRule,
    source: &mut dyn JumpSource,
    buf: &mut Vec<Offspring>,
    jumps: &mut Vec<[f64; 2]>,
) -> Result<(Generation, Vec<u32>, Vec<NodeKey>)> {
    let n = positions.len();
    buf.clear();
    jumps.clear();
    for i in 0..n {
        let mut pair = [0.0; 2];
        for b in 1..=2u8 {
            let key = keys[i].child(b);
            let site = JumpSite { time, rank: i, branch: b, key, positions };
            let x = checked_jump(source, &site)?;
            pair[(b - 1) as usize] = x;
            buf.push(Offspring { pos: positions[i] + x, lex: 2 * lex[i] + (b as u32 - 1), parent: i as u32, branch: b });
        }
        jumps.push(pair);
    }
    let better = |a: &Offspring, b: &Offspring| -> Ordering {
        let by_pos = b.pos.total_cmp(&a.pos);
        match tie {
            TieRule::LexSmallestWins => by_pos.then(a.lex.cmp(&b.lex)),
            TieRule::LexLargestWins => by_pos.then(b.lex.cmp(&a.lex)),
        }
    };
    buf.select_nth_unstable_by(n - 1, better);
    let survivors = &mut buf[..n];
    survivors.sort_unstable_by(|a, b| better(b, a));

    let mut mark = vec![0u32; 2 * n + 1];
    for o in survivors.iter() {
        mark[o.lex as usize + 1] = 1;
    }
    for k in 1..mark.len() {
        mark[k] += mark[k - 1];
    }
    let mut gen = Generation {
        positions: Vec::with_capacity(n),
        parents: Vec::with_capacity(n),
        branches: Vec::with_capacity(n),
        jumps: None,
    };
    let mut next_lex = Vec::with_capacity(n);
    let mut next_keys = Vec::with_capacity(n);
    for o in survivors.iter() {
        gen.positions.push(o.pos);
        gen.parents.push(o.parent);
        gen.branches.push(o.branch);
        next_lex.push(mark[o.lex as usize]);
        next_keys.push(keys[o.parent as usize].child(o.branch));
    }
    Ok((gen, next_lex, next_keys))
}

/// One step of the direct construction from explicit arrays, for tests.
///
/// `lex` gives the lexicographic label rank of each particle and `keys` its
/// node key; returns the next sorted positions with parent ranks and branches.
pub fn step(
    positions: &[f64],
    lex: &[u32],
    keys: &[NodeKey],
    tie: TieRule,
    time: u32,
    source: &mut dyn JumpSource,
) -> Result<Generation> {
    let (mut buf, mut jumps) = (Vec::new(), Vec::new());
    Ok(direct_step(time, positions, lex, keys, tie, source, &mut buf, &mut jumps)?.0)
}

/// Direct branch-and-select construction with the keyed random stream.
pub fn run_direct(cfg: &RunConfig) -> Result<Trajectory> {
    run_direct_with(cfg, &mut KeyedSource { law: cfg.law })
}

/// Direct construction with an explicit jump source.
pub fn run_direct_with(cfg: &RunConfig, source: &mut dyn JumpSource) -> Result<Trajectory> {
    let (_, initial) = cfg.prepare()?;
    let order = initial_order(&initial, cfg.tie_rule);
    let mut positions: Vec<f64> = order.iter().map(|&j| initial[j]).collect();
    let mut lex: Vec<u32> = order.iter().map(|&j| j as u32).collect();
    let mut keys: Vec<NodeKey> = order.iter().map(|&j| NodeKey::root(cfg.seed, cfg.replicate, j as u32 + 1)).collect();
    let mut generations = Vec::with_capacity(cfg.t as usize + 1);
    let mut current = Generation { positions: positions.clone(), parents: vec![], branches: vec![], jumps: None };
    let (mut buf, mut jumps) = (Vec::with_capacity(2 * cfg.n as usize), Vec::with_capacity(cfg.n as usize));
    for time in 0..cfg.t {
        let (next, next_lex, next_keys) = direct_step(time, &positions, &lex, &keys, cfg.tie_rule, source, &mut buf, &mut jumps)?;
        current.jumps = Some(Jumps::compact(std::mem::take(&mut jumps)));
        generations.push(current);
        positions.clone_from(&next.positions);
        current = next;
        lex = next_lex;
        keys = next_keys;
    }
    generations.push(current);
    let header = cfg.header(initial, EngineKind::Direct, source.name());
    Trajectory::from_parts(header, generations)
}

/// Node of the explicit forest; roots have `parent == NONE`.
#[derive(Clone, Copy)]
struct TreeNode {
    parent: u32,
    lineage: u32,
    branch: u8,
    live_children: u8,
    key: NodeKey,
    pos: f64,
    rank: u32,
}

const NONE: u32 = u32::MAX;

/// Arena holding the ancestors of the current survivors.
struct Forest {
    nodes: Vec<TreeNode>,
    free: Vec<u32>,
}

impl Forest {
    fn insert(&mut self, node: TreeNode) -> u32 {
        if node.parent != NONE {
            self.nodes[node.parent as usize].live_children += 1;
        }
        match self.free.pop() {
            Some(k) => {
                self.nodes[k as usize] = node;
                k
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() as u32 - 1
            }
        }
    }

    /// Remove a leaf and every ancestor left without live children.
    fn prune(&mut self, mut k: u32) {
        loop {
            let parent = self.nodes[k as usize].parent;
            self.free.push(k);
            if parent == NONE {
                return;
            }
            let p = &mut self.nodes[parent as usize];
            p.live_children -= 1;
            if p.live_children > 0 {
                return;
            }
            k = parent;
        }
    }

    /// Lexicographic order of the labels `(j, u)` of two nodes of equal depth.
    fn cmp_label(&self, a: u32, b: u32) -> Ordering {
        let (na, nb) = (&self.nodes[a as usize], &self.nodes[b as usize]);
        if na.lineage != nb.lineage {
            return na.lineage.cmp(&nb.lineage);
        }
        let (mut x, mut y) = (a, b);
        while x != y {
            let (px, py) = (self.nodes[x as usize].parent, self.nodes[y as usize].parent);
            if px == py {
                return self.nodes[x as usize].branch.cmp(&self.nodes[y as usize].branch);
            }
            x = px;
            y = py;
        }
        Ordering::Equal
    }

    fn live(&self) -> usize {
        self.nodes.len() - self.free.len()
    }
}

/// Construction from `N` independent branching random walks with survivor sets `H_n`.
pub fn run_brw_construction(cfg: &RunConfig) -> Result<Trajectory> {
    run_brw_construction_with(cfg, &mut KeyedSource { law: cfg.law })
}

/// As [`run_brw_construction`] with an explicit jump source.
pub fn run_brw_construction_with(cfg: &RunConfig, source: &mut dyn JumpSource) -> Result<Trajectory> {
    Ok(brw_inner(cfg, source)?.0)
}

/// Runs the tree construction and also reports the peak number of live tree nodes.
pub fn brw_construction_peak_nodes(cfg: &RunConfig) -> Result<usize> {
    Ok(brw_inner(cfg, &mut KeyedSource { law: cfg.law })?.1)
}

fn brw_inner(cfg: &RunConfig, source: &mut dyn JumpSource) -> Result<(Trajectory, usize)> {
    let (_, initial) = cfg.prepare()?;
    let n = cfg.n as usize;
    let mut forest = Forest { nodes: Vec::with_capacity(4 * n), free: Vec::new() };
    let tie = cfg.tie_rule;
    // H_0 = {(1,∅), …, (N,∅)}.
    let mut h: Vec<u32> = (0..n)
        .map(|j| {
            forest.insert(TreeNode {
                parent: NONE,
                lineage: j as u32 + 1,
                branch: 0,
                live_children: 0,
                key: NodeKey::root(cfg.seed, cfg.replicate, j as u32 + 1),
                pos: initial[j],
                rank: 0,
            })
        })
        .collect();
    let sigma_order = |forest: &Forest, a: u32, b: u32| -> Ordering {
        let by_pos = forest.nodes[a as usize].pos.total_cmp(&forest.nodes[b as usize].pos);
        let by_label = forest.cmp_label(a, b);
        match tie {
            TieRule::LexSmallestWins => by_pos.then(by_label.reverse()),
            TieRule::LexLargestWins => by_pos.then(by_label),
        }
    };
    h.sort_by(|&a, &b| sigma_order(&forest, a, b));
    for (i, &k) in h.iter().enumerate() {
        forest.nodes[k as usize].rank = i as u32;
    }
    let mut generations = Vec::with_capacity(cfg.t as usize + 1);
    let mut current = Generation { positions: h.iter().map(|&k| forest.nodes[k as usize].pos).collect(), parents: vec![], branches: vec![], jumps: None };
    let mut peak = forest.live();
    for time in 0..cfg.t {
        let mut h_prime = Vec::with_capacity(2 * n);
        let mut jumps = Vec::with_capacity(n);
        for (i, &k) in h.iter().enumerate() {
            let parent = forest.nodes[k as usize];
            let mut pair = [0.0; 2];
            for b in 1..=2u8 {
                let key = parent.key.child(b);
                let site = JumpSite { time, rank: i, branch: b, key, positions: &current.positions };
                let y = checked_jump(source, &site)?;
                pair[(b - 1) as usize] = y;
                h_prime.push(forest.insert(TreeNode {
                    parent: k,
                    lineage: parent.lineage,
                    branch: b,
                    live_children: 0,
                    key,
                    pos: parent.pos + y,
                    rank: 0,
                }));
            }
            jumps.push(pair);
        }
        peak = peak.max(forest.live());
        // The N largest of 𝒴_j(u) over H'_n, best first.
        h_prime.sort_by(|&a, &b| sigma_order(&forest, b, a));
        for &k in &h_prime[n..] {
            forest.prune(k);
        }
        h_prime.truncate(n);
        h_prime.reverse();
        let mut next = Generation { positions: Vec::with_capacity(n), parents: Vec::with_capacity(n), branches: Vec::with_capacity(n), jumps: None };
        for &k in &h_prime {
            let node = forest.nodes[k as usize];
            next.positions.push(node.pos);
            next.parents.push(forest.nodes[node.parent as usize].rank);
            next.branches.push(node.branch);
        }
        for (i, &k) in h_prime.iter().enumerate() {
            forest.nodes[k as usize].rank = i as u32;
        }
        current.jumps = Some(Jumps::compact(jumps));
        generations.push(current);
        current = next;
        h = h_prime;
    }
    generations.push(current);
    let header = cfg.header(initial, EngineKind::Brw, source.name());
    Ok((Trajectory::from_parts(header, generations)?, peak))
}
