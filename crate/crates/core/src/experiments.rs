//! Monte-Carlo harness: replicate runs on keyed substreams, per-replicate
//! reductions, and summary statistics for coalescence and spatial spread.
//!
//! Replicate `r` of size `N` is the engine run with `replicate = r`, so a run
//! with one replicate reproduces a single simulation with the same seed.
//! Records come back in replicate order whatever the thread count.

pub mod bounds;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_direct, RunConfig, DEFAULT_MAX_BYTES};
use crate::error::{Error, Result};
use crate::events::{evaluate_events, l_count, EventParams, EventReport};
use crate::genealogy::{ancestor_index, coalescence_profile, sample_uniform, CoalescenceProfile};
use crate::schedule::{schedule_from_eta, ConstantSchedule};
use crate::stats::{binomial, median, Welford};
use crate::tails::{epsilon_schedule, time_scale, Family, TailLaw};
use crate::trajectory::Trajectory;
use crate::verify::RewriteCounts;

/// Schema name and version of the JSON-lines replicate file.
pub const RECORD_SCHEMA: &str = "nbrw-replicates";
/// Schema name and version of the summary CSV.
pub const SUMMARY_SCHEMA: &str = "nbrw-summary";
pub const SCHEMA_VERSION: u32 = 1;

/// Which constant schedule drives the event flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Descriptive: `η` and `ρ` as given, the rest spaced by factors of 10.
    Probe,
    /// The legal relaxed schedule; `η` and `ρ` are ignored.
    Relaxed,
    /// Every constant derived from `η`; fails when they underflow.
    Derived,
}

/// Everything an experiment needs; every key has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub law: Family,
    pub alpha: f64,
    pub n_list: Vec<u64>,
    /// `t = t_mult · ℓ_N + t_offset`.
    pub t_mult: u32,
    pub t_offset: u32,
    pub replicates: u64,
    /// Sample size `M`.
    pub m: usize,
    pub schedule: ScheduleKind,
    pub eta: f64,
    pub rho: f64,
    /// Radii, in units of `a_N`, for `L_{r,N}(t)/N` and `P(d ≥ r a_N)`.
    pub r_grid: Vec<f64>,
    /// Truncation level `r` of the path statistic, relative to `x_N`.
    pub path_r: f64,
    /// `x_N = path_x_mult · a_N` for the path statistic.
    pub path_x_mult: f64,
    pub seed: u64,
    /// Output directory; `None` lets the caller decide.
    pub output: Option<PathBuf>,
    pub max_bytes: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            law: Family::Pareto,
            alpha: 1.0,
            n_list: vec![1 << 8, 1 << 11, 1 << 14],
            t_mult: 5,
            t_offset: 0,
            replicates: 100,
            m: 4,
            schedule: ScheduleKind::Probe,
            eta: 0.5,
            rho: 0.1,
            r_grid: vec![0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0],
            path_r: 0.1,
            path_x_mult: 1.0,
            seed: 1,
            output: None,
            max_bytes: DEFAULT_MAX_BYTES,
        }
    }
}

const LIST_KEYS: [&str; 2] = ["n_list", "r_grid"];
const STRING_KEYS: [&str; 3] = ["law", "schedule", "output"];

impl ExperimentConfig {
    /// Parse flat `key = value` text (`#` comments, comma lists) or JSON.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).map_err(|e| Error::Parse {
                location: format!("line {}, column {}", e.line(), e.column()),
                message: e.to_string(),
            });
        }
        let mut map = serde_json::Map::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse { location: format!("line {}", i + 1), message };
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let value = if LIST_KEYS.contains(&k) {
                let items: std::result::Result<Vec<serde_json::Value>, _> = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| serde_json::from_str::<serde_json::Value>(s).map_err(|_| bad(format!("{k}: {s:?} is not a number"))))
                    .collect();
                serde_json::Value::Array(items?)
            } else if STRING_KEYS.contains(&k) {
                serde_json::Value::String(v.to_string())
            } else {
                serde_json::from_str(v).map_err(|_| bad(format!("{k}: {v:?} is not a number")))?
            };
            if map.insert(k.to_string(), value).is_some() {
                return Err(bad(format!("duplicate key {k}")));
            }
        }
        serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| Error::Parse { location: "config".into(), message: e.to_string() })
    }

    /// Canonical `key = value` rendering, parsed back by [`parse`](Self::parse).
    pub fn to_kv(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for (k, v) in v.as_object().expect("object") {
            let text = match v {
                serde_json::Value::Null => continue,
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Array(a) => a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
                other => other.to_string(),
            };
            out.push_str(&format!("{k} = {text}\n"));
        }
        out
    }

    pub fn law(&self) -> Result<TailLaw> {
        TailLaw::new(self.law, self.alpha)
    }

    pub fn t_for(&self, n: u64) -> Result<u32> {
        Ok(self.t_mult * time_scale(n)? + self.t_offset)
    }

    /// The event schedule, with `ν = η/(2M²)`.
    pub fn event_schedule(&self) -> Result<ConstantSchedule> {
        let s = match self.schedule {
            ScheduleKind::Probe => ConstantSchedule::probe(self.alpha, self.eta, self.rho)?,
            ScheduleKind::Relaxed => ConstantSchedule::relaxed(self.alpha)?,
            ScheduleKind::Derived => schedule_from_eta(self.eta, self.alpha)?,
        };
        let eta = s.eta;
        Ok(s.with_nu(eta / (2.0 * (self.m * self.m) as f64)))
    }

    fn run_config(&self, n: u64, replicate: u64) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(self.law()?, n, self.t_for(n)?, self.seed);
        cfg.replicate = replicate;
        cfg.max_bytes = self.max_bytes;
        Ok(cfg)
    }

    /// Every check that can fail before any simulation starts.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.n_list.is_empty() {
            return bad("n_list is empty".into());
        }
        if self.m == 0 {
            return bad("sample size m must be at least 1".into());
        }
        if self.r_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("r_grid entries must be positive".into());
        }
        if !(self.path_r > 0.0 && self.path_r < 1.0) || !(self.path_x_mult > 0.0 && self.path_x_mult.is_finite()) {
            return bad("need 0 < path_r < 1 and path_x_mult > 0".into());
        }
        self.event_schedule()?;
        for &n in &self.n_list {
            let ell = time_scale(n)?;
            let t = self.t_for(n)?;
            if t <= 4 * ell {
                return bad(format!("t = {t} must exceed 4ℓ_N = {} for N = {n}", 4 * ell));
            }
            if self.m as u64 > n {
                return bad(format!("sample size {} exceeds N = {n}", self.m));
            }
            self.run_config(n, 0)?.prepare()?;
        }
        Ok(())
    }
}

/// Per-replicate reduction, one JSON line each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub n: u64,
    pub t: u32,
    pub ell: u32,
    pub replicate: u64,
    pub seed: u64,
    pub a: f64,
    pub eps_ell: u32,
    pub sample: Vec<usize>,
    pub mrca_time: Option<u32>,
    pub star_spread: Option<u32>,
    /// `T`, 0 when no record before `t₁`.
    pub big_t: u32,
    /// Whether every sampled particle descends from `(N, T)`; `None` when `T = 0`.
    pub sample_from_leader: Option<bool>,
    /// `d(𝒳(t)) / a_N`.
    pub diameter_t: f64,
    /// `d(𝒳(t₁)) / a_N`.
    pub diameter_t1: f64,
    /// `(r, L_{r,N}(t)/N)` for the configured radii.
    pub l_frac: Vec<(f64, f64)>,
    /// Event flags by name; `None` when undefined.
    pub flags: BTreeMap<String, Option<bool>>,
    /// Largest truncated displacement along a lineage in `[t₄, t]`, over `x_N`.
    pub path_ratio: f64,
}

/// One simulated replicate with its events and sample genealogy.
pub fn run_replicate(cfg: &ExperimentConfig, n: u64, replicate: u64) -> Result<(Trajectory, EventReport, CoalescenceProfile)> {
    let with_index = |e: Error| match e {
        Error::Capacity(m) => Error::Capacity(format!("replicate {replicate} (N = {n}): {m}")),
        other => other,
    };
    let rc = cfg.run_config(n, replicate)?;
    let traj = run_direct(&rc).map_err(with_index)?;
    let t = rc.t;
    let sched = cfg.event_schedule()?;
    let ell = traj.scales.ell;
    let params = EventParams::new(epsilon_schedule(ell).min(ell));
    let sample = sample_uniform(&traj, t, cfg.m, cfg.seed)?;
    let report = evaluate_events(&traj, &sched, t, &sample, &params)?;
    let profile = coalescence_profile(&traj, &sample, t)?;
    Ok((traj, report, profile))
}

/// `max` over lineages of `Σ X·1{X ≤ cap}` along paths that start at or after `from`.
pub fn truncated_path_max(traj: &Trajectory, from: u32, to: u32, cap: f64) -> f64 {
    let n = traj.n();
    let mut best = vec![0.0f64; n];
    let mut top = 0.0f64;
    for s in from..to {
        let g = &traj.generations[s as usize + 1];
        let next: Vec<f64> = (0..n)
            .map(|c| {
                let (p, b) = (g.parents[c] as usize, g.branches[c]);
                let x = traj.jump(p, b, s);
                best[p] + if x <= cap { x } else { 0.0 }
            })
            .collect();
        top = next.iter().copied().fold(top, f64::max);
        best = next;
    }
    top
}

/// Reduce a replicate to its record.
pub fn reduce(cfg: &ExperimentConfig, traj: &Trajectory, report: &EventReport, profile: &CoalescenceProfile) -> ReplicateRecord {
    let w = report.window;
    let a = w.a;
    let n = traj.n();
    let pos = traj.positions(w.t);
    let d = |s: u32| {
        let p = traj.positions(s);
        (p[n - 1] - p[0]) / a
    };
    let sample_from_leader = (report.big_t > 0).then(|| {
        profile.sample.iter().all(|&i| ancestor_index(traj, i, w.t, report.big_t).map_or(false, |r| r == n - 1))
    });
    let x_n = cfg.path_x_mult * a;
    ReplicateRecord {
        n: n as u64,
        t: w.t,
        ell: w.ell,
        replicate: traj.header.replicate,
        seed: traj.header.seed,
        a,
        eps_ell: report.eps_ell,
        sample: profile.sample.clone(),
        mrca_time: profile.mrca_time,
        star_spread: profile.star_spread,
        big_t: report.big_t,
        sample_from_leader,
        diameter_t: d(w.t),
        diameter_t1: d(w.t1),
        l_frac: cfg.r_grid.iter().map(|&r| (r, l_count(pos, r, a) as f64 / n as f64)).collect(),
        flags: report.flags.iter().into_iter().map(|(k, f)| (k.to_string(), f.holds)).collect(),
        path_ratio: truncated_path_max(traj, w.t4, w.t, cfg.path_r * x_n) / x_n,
    }
}

/// Every replicate of every `N`, in `(N, replicate)` order; runs on the
/// current rayon pool and discards trajectories after reduction.
pub fn run_replicates(cfg: &ExperimentConfig) -> Result<Vec<ReplicateRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &n in &cfg.n_list {
        let recs: Result<Vec<ReplicateRecord>> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| run_replicate(cfg, n, r).map(|(traj, rep, prof)| reduce(cfg, &traj, &rep, &prof)))
            .collect();
        out.extend(recs?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Files.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RecordHeader {
    schema: String,
    version: u32,
    config: ExperimentConfig,
}

/// Header line with the config, then one record per line.
pub fn write_records<W: Write>(mut w: W, cfg: &ExperimentConfig, records: &[ReplicateRecord]) -> Result<()> {
    let head = RecordHeader { schema: RECORD_SCHEMA.into(), version: SCHEMA_VERSION, config: cfg.clone() };
    let json = |e: serde_json::Error| Error::Io(e.to_string());
    writeln!(w, "{}", serde_json::to_string(&head).map_err(json)?)?;
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r).map_err(json)?)?;
    }
    Ok(())
}

/// Inverse of [`write_records`]; refuses other schemas and versions.
pub fn read_records<R: BufRead>(r: R) -> Result<(ExperimentConfig, Vec<ReplicateRecord>)> {
    let mut lines = r.lines().enumerate();
    let parse = |i: usize, e: serde_json::Error| Error::Parse { location: format!("line {}", i + 1), message: e.to_string() };
    let (i, first) = lines.next().ok_or_else(|| Error::Parse { location: "line 1".into(), message: "empty file".into() })?;
    let head: RecordHeader = serde_json::from_str(&first?).map_err(|e| parse(i, e))?;
    if head.schema != RECORD_SCHEMA || head.version != SCHEMA_VERSION {
        return Err(Error::Schema {
            expected: format!("{RECORD_SCHEMA} v{SCHEMA_VERSION}"),
            found: format!("{} v{}", head.schema, head.version),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| parse(i, e))?);
        }
    }
    Ok((head.config, out))
}

/// One summary statistic at one `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: u64,
    pub t: u32,
    pub statistic: String,
    pub estimate: f64,
    /// Binomial or empirical standard error.
    pub se: f64,
    /// Numerator of a frequency, when the estimate is one.
    pub hits: Option<u64>,
    /// Replicates the estimate is based on.
    pub count: u64,
}

impl SummaryRow {
    fn freq(n: u64, t: u32, statistic: impl Into<String>, hits: u64, count: u64) -> Self {
        let (estimate, se) = binomial(hits, count);
        SummaryRow { n, t, statistic: statistic.into(), estimate, se, hits: Some(hits), count }
    }

    fn mean(n: u64, t: u32, statistic: impl Into<String>, w: &Welford) -> Self {
        SummaryRow { n, t, statistic: statistic.into(), estimate: w.mean, se: w.se(), hits: None, count: w.count }
    }
}

fn schema_line(name: &str) -> String {
    format!("# schema={name} version={SCHEMA_VERSION}")
}

/// CSV with a schema comment line before the column header.
pub fn write_summary<W: Write>(mut w: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(w, "{}", schema_line(SUMMARY_SCHEMA))?;
    let mut c = csv::Writer::from_writer(w);
    for r in rows {
        c.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    if rows.is_empty() {
        c.write_record(["n", "t", "statistic", "estimate", "se", "hits", "count"]).map_err(|e| Error::Io(e.to_string()))?;
    }
    c.flush()?;
    Ok(())
}

/// Read a summary CSV, checking the schema line.
pub fn read_summary<R: BufRead>(mut r: R) -> Result<Vec<SummaryRow>> {
    let mut first = String::new();
    r.read_line(&mut first)?;
    check_schema_line(first.trim_end(), SUMMARY_SCHEMA)?;
    let mut c = csv::Reader::from_reader(r);
    c.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Parse { location: format!("row {}", i + 1), message: e.to_string() }))
        .collect()
}

/// Compare a `# schema=… version=…` line with the expected schema.
pub fn check_schema_line(line: &str, name: &str) -> Result<()> {
    if line == schema_line(name) {
        return Ok(());
    }
    Err(Error::Schema { expected: schema_line(name), found: line.to_string() })
}

// ---------------------------------------------------------------------------
// Statistics.
// ---------------------------------------------------------------------------

fn by_n(records: &[ReplicateRecord]) -> BTreeMap<u64, Vec<&ReplicateRecord>> {
    let mut m: BTreeMap<u64, Vec<&ReplicateRecord>> = BTreeMap::new();
    for r in records {
        m.entry(r.n).or_default().push(r);
    }
    m
}

/// Bin edges `0, 0.25, …, 3` for times in units of `ℓ_N`.
pub const HIST_BINS: usize = 12;
pub const HIST_WIDTH: f64 = 0.25;

/// Name of histogram bin `k` of a family, e.g. `mrca_hist[1.25,1.50)`.
pub fn bin_name(family: &str, k: usize) -> String {
    format!("{family}[{:.2},{:.2})", k as f64 * HIST_WIDTH, (k + 1) as f64 * HIST_WIDTH)
}

/// Bin of `x ≥ 0`; `None` past the last edge.
pub fn bin_of(x: f64) -> Option<usize> {
    let k = (x / HIST_WIDTH).floor();
    (k >= 0.0 && (k as usize) < HIST_BINS).then_some(k as usize)
}

fn histogram(rows: &mut Vec<SummaryRow>, n: u64, t: u32, family: &str, xs: &[f64]) {
    let mut counts = [0u64; HIST_BINS];
    let mut over = 0;
    for &x in xs {
        match bin_of(x) {
            Some(k) => counts[k] += 1,
            None => over += 1,
        }
    }
    let total = xs.len() as u64;
    for (k, &c) in counts.iter().enumerate() {
        rows.push(SummaryRow::freq(n, t, bin_name(family, k), c, total));
    }
    rows.push(SummaryRow::freq(n, t, format!("{family}_overflow"), over, total));
}

/// MRCA window frequency, MRCA-time histogram, star-shapedness, descent
/// through the record holder, and the `(t − T)/ℓ_N` histogram.
pub fn coalescence_statistics(records: &[ReplicateRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (n, recs) in by_n(records) {
        let t = recs[0].t;
        let total = recs.len() as u64;
        let in_window = recs
            .iter()
            .filter(|r| r.mrca_time.is_some_and(|m| m + 2 * r.ell >= r.t && m + r.ell <= r.t))
            .count() as u64;
        rows.push(SummaryRow::freq(n, t, "mrca_in_window", in_window, total));
        let with: Vec<&&ReplicateRecord> = recs.iter().filter(|r| r.mrca_time.is_some()).collect();
        rows.push(SummaryRow::freq(n, t, "mrca_none", total - with.len() as u64, total));
        let ages: Vec<f64> = with.iter().map(|r| (r.t - r.mrca_time.unwrap()) as f64 / r.ell as f64).collect();
        histogram(&mut rows, n, t, "mrca_hist", &ages);
        let star = with.iter().filter(|r| r.star_spread.is_some_and(|s| s <= r.eps_ell)).count() as u64;
        rows.push(SummaryRow::freq(n, t, "star", star, with.len() as u64));
        let with_t: Vec<&&ReplicateRecord> = recs.iter().filter(|r| r.big_t > 0).collect();
        let through = with_t.iter().filter(|r| r.sample_from_leader == Some(true)).count() as u64;
        rows.push(SummaryRow::freq(n, t, "sample_from_leader", through, with_t.len() as u64));
        let back: Vec<f64> = with_t.iter().map(|r| (r.t - r.big_t) as f64 / r.ell as f64).collect();
        histogram(&mut rows, n, t, "t_hist", &back);
    }
    rows
}

fn r_label(r: f64) -> String {
    format!("{r}")
}

/// Mean `L_{r,N}(t)/N`, `P(d(𝒳(t)) ≥ r a_N)` per radius, and the median
/// diameter. Radii missing from a record's `l_frac` are skipped for `L`.
pub fn spatial_statistics(records: &[ReplicateRecord], r_grid: &[f64]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (n, recs) in by_n(records) {
        let t = recs[0].t;
        let total = recs.len() as u64;
        for &r in r_grid {
            let w: Welford = recs.iter().filter_map(|x| x.l_frac.iter().find(|p| p.0 == r).map(|p| p.1)).collect();
            if w.count > 0 {
                rows.push(SummaryRow::mean(n, t, format!("l_frac@{}", r_label(r)), &w));
            }
            let hits = recs.iter().filter(|x| x.diameter_t >= r).count() as u64;
            rows.push(SummaryRow::freq(n, t, format!("p_diam_ge@{}", r_label(r)), hits, total));
        }
        let d: Vec<f64> = recs.iter().map(|x| x.diameter_t).collect();
        let se = median_se(&d);
        rows.push(SummaryRow {
            n,
            t,
            statistic: "diam_median".into(),
            estimate: median(&d).unwrap_or(0.0),
            se,
            hits: None,
            count: total,
        });
    }
    rows
}

/// Distribution-free standard error of the median: half the distance between
/// the order statistics at ranks `n/2 ± √n/2`, one binomial SD either side.
pub fn median_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let half = (n as f64).sqrt() / 2.0;
    let lo = ((n as f64 / 2.0 - half).floor().max(0.0)) as usize;
    let hi = ((n as f64 / 2.0 + half).ceil() as usize).min(n - 1);
    0.5 * (v[hi] - v[lo])
}

/// Frequency that some lineage in `[t₄, t]` moves at least `x_N` with jumps
/// above `r x_N` discarded.
pub fn corollary_path_statistic(records: &[ReplicateRecord]) -> Vec<SummaryRow> {
    by_n(records)
        .into_iter()
        .map(|(n, recs)| {
            let hits = recs.iter().filter(|r| r.path_ratio >= 1.0).count() as u64;
            SummaryRow::freq(n, recs[0].t, "path_violation", hits, recs.len() as u64)
        })
        .collect()
}

/// Failure frequencies of the `𝒜` events; an undefined `𝒜₄` counts as holding.
pub fn event_statistics(records: &[ReplicateRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (n, recs) in by_n(records) {
        let t = recs[0].t;
        for name in ["A1", "A2", "A2'", "A3", "A4"] {
            let fails = recs.iter().filter(|r| r.flags.get(name).copied().flatten() == Some(false)).count() as u64;
            rows.push(SummaryRow::freq(n, t, format!("{name}_fail"), fails, recs.len() as u64));
        }
    }
    rows
}

/// Inputs of the rewrite-bound check for one `N`.
pub fn rewrite_counts(records: &[ReplicateRecord], n: u64, sched: &ConstantSchedule, m: usize) -> RewriteCounts {
    let recs: Vec<&ReplicateRecord> = records.iter().filter(|r| r.n == n).collect();
    let fails = |name: &str| recs.iter().filter(|r| r.flags.get(name).copied().flatten() == Some(false)).count() as u64;
    RewriteCounts {
        replicates: recs.len() as u64,
        a2_fail: fails("A2"),
        a3_fail: fails("A3"),
        a4_fail: fails("A4"),
        eta: sched.eta,
        nu: sched.nu,
        m,
    }
}

/// All summary rows of an experiment, grouped by statistic family.
pub fn summarize(cfg: &ExperimentConfig, records: &[ReplicateRecord]) -> Vec<SummaryRow> {
    let mut rows = coalescence_statistics(records);
    rows.extend(spatial_statistics(records, &cfg.r_grid));
    rows.extend(corollary_path_statistic(records));
    rows.extend(event_statistics(records));
    rows
}

/// Look up one statistic at one `N`.
pub fn find<'a>(rows: &'a [SummaryRow], n: u64, statistic: &str) -> Option<&'a SummaryRow> {
    rows.iter().find(|r| r.n == n && r.statistic == statistic)
}
