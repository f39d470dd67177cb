//! Immutable trajectory records and their file formats.
//!
//! Ranks are 0-based throughout the crate: rank 0 is the leftmost particle
//! and rank `N − 1` is the leader. Branch labels are 1 and 2.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tails::{Scales, TailLaw};

/// Format tag written into every trajectory file.
pub const FORMAT: &str = "nbrw-trajectory";
/// Current schema version of trajectory files.
pub const VERSION: u32 = 1;
const BINARY_MAGIC: &[u8; 8] = b"NBRWTRJ1";

/// How equal positions are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Among equal positions the smaller lexicographic label ranks higher.
    #[default]
    LexSmallestWins,
    /// Among equal positions the larger lexicographic label ranks higher.
    LexLargestWins,
}

/// Which construction produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Direct,
    Brw,
}

/// Jumps `X_{i,b,n}` of one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Jumps {
    /// `[X_{i,1,n}, X_{i,2,n}]` for every rank.
    Dense(Vec<[f64; 2]>),
    /// Nonzero jumps only, as `(rank, branch, value)` sorted by rank then branch.
    Sparse(Vec<(u32, u8, f64)>),
}

impl Jumps {
    /// Store `dense` compactly when fewer than a quarter of jumps are nonzero.
    pub fn compact(dense: Vec<[f64; 2]>) -> Self {
        let nonzero = dense.iter().flatten().filter(|&&x| x != 0.0).count();
        if nonzero * 4 < 2 * dense.len() {
            let mut sparse = Vec::with_capacity(nonzero);
            for (i, pair) in dense.iter().enumerate() {
                for (k, &x) in pair.iter().enumerate() {
                    if x != 0.0 {
                        sparse.push((i as u32, k as u8 + 1, x));
                    }
                }
            }
            Jumps::Sparse(sparse)
        } else {
            Jumps::Dense(dense)
        }
    }

    /// Jump of rank `i` along branch `b`.
    pub fn get(&self, i: usize, b: u8) -> f64 {
        match self {
            Jumps::Dense(v) => v[i][(b - 1) as usize],
            Jumps::Sparse(v) => v
                .binary_search_by(|&(r, bb, _)| (r, bb).cmp(&(i as u32, b)))
                .map(|k| v[k].2)
                .unwrap_or(0.0),
        }
    }

    /// Visit every jump that may exceed `threshold ≥ 0` as `(rank, branch, value)`.
    pub fn for_each_above(&self, threshold: f64, mut f: impl FnMut(usize, u8, f64)) {
        match self {
            Jumps::Dense(v) => {
                for (i, pair) in v.iter().enumerate() {
                    for (k, &x) in pair.iter().enumerate() {
                        if x > threshold {
                            f(i, k as u8 + 1, x);
                        }
                    }
                }
            }
            Jumps::Sparse(v) => {
                for &(r, b, x) in v {
                    if x > threshold {
                        f(r as usize, b, x);
                    }
                }
            }
        }
    }

    fn dense(&self, n: usize) -> Vec<[f64; 2]> {
        match self {
            Jumps::Dense(v) => v.clone(),
            Jumps::Sparse(v) => {
                let mut out = vec![[0.0; 2]; n];
                for &(r, b, x) in v {
                    out[r as usize][(b - 1) as usize] = x;
                }
                out
            }
        }
    }
}

/// One time step: sorted positions and links to the previous generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    /// `𝒳_1(n) ≤ … ≤ 𝒳_N(n)`.
    pub positions: Vec<f64>,
    /// Parent rank at `n − 1`; empty at `n = 0`.
    pub parents: Vec<u32>,
    /// Branch taken from the parent; empty at `n = 0`.
    pub branches: Vec<u8>,
    /// Jumps of this generation's particles; `None` at the final time.
    pub jumps: Option<Jumps>,
}

/// Run metadata stored in the file header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub law: TailLaw,
    pub n: u64,
    pub t: u32,
    pub seed: u64,
    pub replicate: u64,
    pub tie_rule: TieRule,
    pub engine: EngineKind,
    /// Initial positions indexed by lineage `j − 1`.
    pub initial: Vec<f64>,
    /// Source of the jumps: `keyed` for the random stream, otherwise a fixture name.
    pub source: String,
}

/// A complete simulated window `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub header: Header,
    pub scales: Scales,
    pub generations: Vec<Generation>,
}

impl Trajectory {
    /// Assemble from parts, validating shapes and links.
    pub fn from_parts(header: Header, generations: Vec<Generation>) -> Result<Self> {
        let scales = Scales::new(&header.law, header.n)?;
        let traj = Trajectory { header, scales, generations };
        traj.validate()?;
        Ok(traj)
    }

    fn validate(&self) -> Result<()> {
        let n = self.header.n as usize;
        let bad = |msg: String| Err(Error::Parse { location: "trajectory".into(), message: msg });
        if self.generations.len() != self.header.t as usize + 1 {
            return bad(format!("expected {} generations, found {}", self.header.t + 1, self.generations.len()));
        }
        if self.header.initial.len() != n {
            return bad("initial configuration has wrong length".into());
        }
        for (k, g) in self.generations.iter().enumerate() {
            if g.positions.len() != n || g.positions.iter().any(|x| !x.is_finite()) {
                return bad(format!("generation {k}: positions malformed"));
            }
            let links = if k == 0 { 0 } else { n };
            if g.parents.len() != links || g.branches.len() != links {
                return bad(format!("generation {k}: link arrays malformed"));
            }
            if g.parents.iter().any(|&p| p as usize >= n) || g.branches.iter().any(|&b| b != 1 && b != 2) {
                return bad(format!("generation {k}: link out of range"));
            }
            let last = k == self.header.t as usize;
            match &g.jumps {
                None if !last => return bad(format!("generation {k}: missing jumps")),
                Some(_) if last => return bad(format!("generation {k}: unexpected jumps")),
                Some(Jumps::Dense(v)) if v.len() != n => return bad(format!("generation {k}: jump table malformed")),
                Some(Jumps::Sparse(v)) if v.iter().any(|&(r, b, _)| r as usize >= n || (b != 1 && b != 2)) => {
                    return bad(format!("generation {k}: sparse jump out of range"));
                }
                Some(Jumps::Sparse(v)) if v.windows(2).any(|w| (w[0].0, w[0].1) >= (w[1].0, w[1].1)) => {
                    return bad(format!("generation {k}: sparse jumps unsorted"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Population size `N`.
    pub fn n(&self) -> usize {
        self.header.n as usize
    }

    /// Final time `t`.
    pub fn t(&self) -> u32 {
        self.header.t
    }

    /// Law of the jumps.
    pub fn law(&self) -> &TailLaw {
        &self.header.law
    }

    /// `a_N`.
    pub fn a(&self) -> f64 {
        self.scales.a
    }

    /// Sorted positions `𝒳(s)`.
    pub fn positions(&self, s: u32) -> &[f64] {
        &self.generations[s as usize].positions
    }

    /// `𝒳_i(s)`, 0-based rank.
    pub fn position(&self, i: usize, s: u32) -> f64 {
        self.generations[s as usize].positions[i]
    }

    /// Leader position `𝒳_N(s)`.
    pub fn leader(&self, s: u32) -> f64 {
        *self.positions(s).last().expect("N >= 2")
    }

    /// Parent rank at `s − 1` of rank `i` at `s ≥ 1`.
    pub fn parent(&self, i: usize, s: u32) -> usize {
        self.generations[s as usize].parents[i] as usize
    }

    /// Branch from the parent of rank `i` at `s ≥ 1`.
    pub fn branch(&self, i: usize, s: u32) -> u8 {
        self.generations[s as usize].branches[i]
    }

    /// `X_{i,b,s}` for `s < t`.
    pub fn jump(&self, i: usize, b: u8, s: u32) -> f64 {
        self.generations[s as usize].jumps.as_ref().expect("no jumps at final time").get(i, b)
    }

    /// Jump table of generation `s < t`.
    pub fn jumps(&self, s: u32) -> &Jumps {
        self.generations[s as usize].jumps.as_ref().expect("no jumps at final time")
    }

    /// Lineage `j` (1-based) of every rank at every time: the `j` of `σ(i,s)`.
    pub fn lineages(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::with_capacity(self.generations.len());
        out.push(self.lineages_at_zero());
        for s in 1..self.generations.len() {
            let prev: &Vec<u32> = &out[s - 1];
            let row = self.generations[s].parents.iter().map(|&p| prev[p as usize]).collect();
            out.push(row);
        }
        out
    }

    fn lineages_at_zero(&self) -> Vec<u32> {
        let init = &self.header.initial;
        let mut order: Vec<u32> = (1..=init.len() as u32).collect();
        order.sort_by(|&a, &b| {
            let by_pos = init[a as usize - 1].total_cmp(&init[b as usize - 1]);
            match self.header.tie_rule {
                TieRule::LexSmallestWins => by_pos.then(b.cmp(&a)),
                TieRule::LexLargestWins => by_pos.then(a.cmp(&b)),
            }
        });
        order
    }

    /// Tree label `σ(i, s) = (j, u)`, reconstructed by walking parent links.
    pub fn label(&self, i: usize, s: u32) -> (u32, Vec<u8>) {
        let mut path = Vec::with_capacity(s as usize);
        let mut r = i;
        for k in (1..=s).rev() {
            path.push(self.branch(r, k));
            r = self.parent(r, k);
        }
        path.reverse();
        (self.lineages_at_zero()[r], path)
    }

    /// Largest absolute position over the run.
    pub fn max_magnitude(&self) -> f64 {
        self.generations.iter().flat_map(|g| g.positions.iter()).fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Whether positions, links and jumps agree exactly with `other`.
    pub fn same_process(&self, other: &Trajectory) -> bool {
        if self.n() != other.n() || self.t() != other.t() {
            return false;
        }
        let n = self.n();
        self.generations.iter().zip(&other.generations).all(|(a, b)| {
            a.positions.iter().zip(&b.positions).all(|(x, y)| x.to_bits() == y.to_bits())
                && a.parents == b.parents
                && a.branches == b.branches
                && match (&a.jumps, &b.jumps) {
                    (None, None) => true,
                    (Some(x), Some(y)) => {
                        x.dense(n).iter().flatten().zip(y.dense(n).iter().flatten()).all(|(p, q)| p.to_bits() == q.to_bits())
                    }
                    _ => false,
                }
        })
    }

    /// First generation where the two trajectories differ, if any.
    pub fn first_difference(&self, other: &Trajectory) -> Option<u32> {
        (0..=self.t().min(other.t())).find(|&s| {
            let (a, b) = (&self.generations[s as usize], &other.generations[s as usize]);
            a.positions.iter().zip(&b.positions).any(|(x, y)| x.to_bits() != y.to_bits())
                || a.parents != b.parents
                || a.branches != b.branches
        })
    }

    /// Write as JSON lines: one header line, then one line per generation.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: serde_json::Error| Error::Io(e.to_string());
        serde_json::to_writer(&mut w, &self.header).map_err(io)?;
        w.write_all(b"\n")?;
        for (k, g) in self.generations.iter().enumerate() {
            let rec = GenRecord { n: k as u32, gen: g.clone() };
            serde_json::to_writer(&mut w, &rec).map_err(io)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read the JSON-lines format, reporting the failing line on error.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let parse_err = |line: usize, e: &dyn std::fmt::Display| Error::Parse { location: format!("line {}", line + 1), message: e.to_string() };
        let (ln, first) = lines.next().ok_or_else(|| parse_err(0, &"empty file"))?;
        let first = first?;
        let header: Header = serde_json::from_str(&first).map_err(|e| parse_err(ln, &e))?;
        check_header(&header)?;
        let mut generations = Vec::with_capacity(header.t as usize + 1);
        for (ln, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: GenRecord = serde_json::from_str(&line).map_err(|e| parse_err(ln, &e))?;
            if rec.n as usize != generations.len() {
                return Err(parse_err(ln, &format!("expected generation {}, found {}", generations.len(), rec.n)));
            }
            generations.push(rec.gen);
        }
        Trajectory::from_parts(header, generations)
    }

    /// Write the binary variant: magic, length-prefixed JSON header, then
    /// little-endian arrays per generation.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        let head = serde_json::to_vec(&self.header).map_err(|e| Error::Io(e.to_string()))?;
        w.write_all(&(head.len() as u64).to_le_bytes())?;
        w.write_all(&head)?;
        for g in &self.generations {
            for x in &g.positions {
                w.write_all(&x.to_le_bytes())?;
            }
            for p in &g.parents {
                w.write_all(&p.to_le_bytes())?;
            }
            w.write_all(&g.branches)?;
            match &g.jumps {
                None => w.write_all(&[0u8])?,
                Some(Jumps::Dense(v)) => {
                    w.write_all(&[1u8])?;
                    for x in v.iter().flatten() {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
                Some(Jumps::Sparse(v)) => {
                    w.write_all(&[2u8])?;
                    w.write_all(&(v.len() as u64).to_le_bytes())?;
                    for &(r, b, x) in v {
                        w.write_all(&r.to_le_bytes())?;
                        w.write_all(&[b])?;
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Read the binary variant.
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut offset = 0u64;
        let mut take = |r: &mut R, len: usize| -> Result<Vec<u8>> {
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(|e| Error::Parse { location: format!("byte {offset}"), message: e.to_string() })?;
            offset += len as u64;
            Ok(buf)
        };
        if take(&mut r, 8)?.as_slice() != BINARY_MAGIC {
            return Err(Error::Parse { location: "byte 0".into(), message: "bad magic".into() });
        }
        let len = u64::from_le_bytes(take(&mut r, 8)?.try_into().unwrap()) as usize;
        let header: Header = serde_json::from_slice(&take(&mut r, len)?)
            .map_err(|e| Error::Parse { location: "header".into(), message: e.to_string() })?;
        check_header(&header)?;
        let n = header.n as usize;
        let f64s = |b: &[u8]| b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect::<Vec<_>>();
        let mut generations = Vec::with_capacity(header.t as usize + 1);
        for k in 0..=header.t as usize {
            let positions = f64s(&take(&mut r, 8 * n)?);
            let links = if k == 0 { 0 } else { n };
            let parents = take(&mut r, 4 * links)?.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
            let branches = take(&mut r, links)?;
            let jumps = match take(&mut r, 1)?[0] {
                0 => None,
                1 => Some(Jumps::Dense(f64s(&take(&mut r, 16 * n)?).chunks_exact(2).map(|c| [c[0], c[1]]).collect())),
                2 => {
                    let m = u64::from_le_bytes(take(&mut r, 8)?.try_into().unwrap()) as usize;
                    let raw = take(&mut r, 13 * m)?;
                    Some(Jumps::Sparse(
                        raw.chunks_exact(13)
                            .map(|c| (u32::from_le_bytes(c[0..4].try_into().unwrap()), c[4], f64::from_le_bytes(c[5..13].try_into().unwrap())))
                            .collect(),
                    ))
                }
                tag => return Err(Error::Parse { location: format!("generation {k}"), message: format!("bad jump tag {tag}") }),
            };
            generations.push(Generation { positions, parents, branches, jumps });
        }
        Trajectory::from_parts(header, generations)
    }

    /// Write to `path`, choosing the binary variant for a `.bin` extension.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        if path.extension().is_some_and(|e| e == "bin") {
            self.write_binary(f)
        } else {
            self.write_jsonl(f)
        }
    }

    /// Read from `path`, detecting the variant from the magic bytes.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let is_binary = f.fill_buf()?.starts_with(BINARY_MAGIC);
        if is_binary {
            Trajectory::read_binary(f)
        } else {
            Trajectory::read_jsonl(f)
        }
    }
}

fn check_header(h: &Header) -> Result<()> {
    if h.format != FORMAT {
        return Err(Error::Parse { location: "header".into(), message: format!("not a trajectory file: {:?}", h.format) });
    }
    if h.version != VERSION {
        return Err(Error::Schema { expected: VERSION.to_string(), found: h.version.to_string() });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct GenRecord {
    n: u32,
    #[serde(flatten)]
    gen: Generation,
}
