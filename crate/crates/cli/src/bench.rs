//! Sweeps of (problem, variant) runs written as CSV.

use std::fmt;
use std::io::{Read, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use lrsdp::{solve, Problem, SolverConfig, Status};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::input::{load, Format, Kind};
use crate::report::round;

/// Solver configurations compared by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Rank starts small and doubles as needed.
    Dynamic,
    /// Rank held fixed; `None` means the problem's rank cap.
    FixedRank(Option<usize>),
    /// Rank held at the cap and the run stops on feasibility alone.
    NoEarlyTermination,
}

impl Variant {
    pub fn configure(self, base: &SolverConfig, p: &Problem) -> SolverConfig {
        let mut cfg = base.clone();
        match self {
            Variant::Dynamic => cfg.fixed_rank = None,
            Variant::FixedRank(r) => cfg.fixed_rank = Some(r.unwrap_or_else(|| p.rank_cap())),
            Variant::NoEarlyTermination => {
                cfg.fixed_rank = Some(p.rank_cap());
                cfg.early_termination = false;
            }
        }
        cfg
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Dynamic => f.write_str("dynamic"),
            Variant::FixedRank(None) => f.write_str("fixed-rank"),
            Variant::FixedRank(Some(r)) => write!(f, "fixed-rank-{r}"),
            Variant::NoEarlyTermination => f.write_str("no-early-termination"),
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dynamic" => Ok(Variant::Dynamic),
            "fixed-rank" => Ok(Variant::FixedRank(None)),
            "no-early-termination" => Ok(Variant::NoEarlyTermination),
            _ => match s.strip_prefix("fixed-rank-").map(str::parse::<usize>) {
                Some(Ok(r)) if r > 0 => Ok(Variant::FixedRank(Some(r))),
                _ => Err(format!(
                    "unknown variant {s:?} (expected dynamic, fixed-rank, fixed-rank-R or no-early-termination)"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub kind: Kind,
    pub path: PathBuf,
}

/// Parses `id kind path` lines; blank lines and `#` comments are skipped and
/// relative paths resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [id, kind, path] = fields[..] else {
            return Err(CliError::Invalid(format!(
                "manifest line {}: expected `id kind path`, got {line:?}",
                k + 1
            )));
        };
        if entries.iter().any(|e| e.id == id) {
            return Err(CliError::Invalid(format!(
                "manifest line {}: duplicate id {id:?}",
                k + 1
            )));
        }
        entries.push(ManifestEntry {
            id: id.to_string(),
            kind: kind.parse()?,
            path: base.join(path),
        });
    }
    Ok(entries)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new("")))
}

/// Solver statuses plus `Error` for runs that never produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    RankCapStall,
    SigmaCapStall,
    MaxOuter,
    TimeLimit,
    Error,
}

impl From<Status> for RunStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Converged => RunStatus::Converged,
            Status::RankCapStall => RunStatus::RankCapStall,
            Status::SigmaCapStall => RunStatus::SigmaCapStall,
            Status::MaxOuter => RunStatus::MaxOuter,
            Status::TimeLimit => RunStatus::TimeLimit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    pub kind: Kind,
    pub variant: String,
    pub status: RunStatus,
    pub wall_seconds: f64,
    pub objective: Option<f64>,
    pub rounded: Option<f64>,
    pub eta: Option<f64>,
    pub omega: Option<f64>,
    pub xi: Option<f64>,
    pub rank: Option<usize>,
    pub outer_iterations: Option<usize>,
    pub message: String,
}

pub const HEADER: [&str; 13] = [
    "problem",
    "kind",
    "variant",
    "status",
    "wall_seconds",
    "objective",
    "rounded",
    "eta",
    "omega",
    "xi",
    "rank",
    "outer_iterations",
    "message",
];

impl RunRecord {
    fn failed(entry: &ManifestEntry, variant: Variant, message: String) -> Self {
        RunRecord {
            problem: entry.id.clone(),
            kind: entry.kind,
            variant: variant.to_string(),
            status: RunStatus::Error,
            wall_seconds: 0.0,
            objective: None,
            rounded: None,
            eta: None,
            omega: None,
            xi: None,
            rank: None,
            outer_iterations: None,
            message,
        }
    }

    pub fn solved(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    /// Shared settings; the per-run timeout is `base.time_limit`.
    pub base: SolverConfig,
    pub format: Format,
    pub abs_weights: bool,
    /// Rounding trials per run; 0 skips rounding.
    pub round: usize,
    pub jobs: usize,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn run_one(entry: &ManifestEntry, variant: Variant, opts: &BenchOptions) -> RunRecord {
    let attempt = || -> Result<RunRecord> {
        let inst = load(entry.kind, &entry.path, opts.format, opts.abs_weights, None)?;
        let cfg = variant.configure(&opts.base, &inst.problem);
        let res = solve(&inst.problem, &cfg)?;
        let rounded = round(&inst, &res, opts.round, cfg.seed)?;
        Ok(RunRecord {
            problem: entry.id.clone(),
            kind: entry.kind,
            variant: variant.to_string(),
            status: res.status.into(),
            wall_seconds: res.wall_seconds,
            objective: finite(res.objective),
            rounded: rounded.map(|r| r.value()),
            eta: finite(res.eta),
            omega: finite(res.omega),
            xi: finite(res.xi),
            rank: Some(res.rank),
            outer_iterations: Some(res.outer_iterations),
            message: String::new(),
        })
    };
    match catch_unwind(AssertUnwindSafe(attempt)) {
        Ok(Ok(rec)) => rec,
        Ok(Err(e)) => RunRecord::failed(entry, variant, e.to_string()),
        Err(_) => RunRecord::failed(entry, variant, "solver panicked".into()),
    }
}

/// Runs every (entry, variant) pair, `opts.jobs` at a time. Rows come back
/// in manifest order, variants innermost, whatever the scheduling.
pub fn run_bench(entries: &[ManifestEntry], variants: &[Variant], opts: &BenchOptions) -> Vec<RunRecord> {
    let tasks: Vec<(&ManifestEntry, Variant)> = entries
        .iter()
        .flat_map(|e| variants.iter().map(move |&v| (e, v)))
        .collect();
    let next = AtomicUsize::new(0);
    let workers = opts.jobs.clamp(1, tasks.len().max(1));
    let mut done: Vec<(usize, RunRecord)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        let Some(&(entry, variant)) = tasks.get(k) else {
                            break;
                        };
                        out.push((k, run_one(entry, variant, opts)));
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("bench worker panicked"))
            .collect()
    });
    done.sort_by_key(|&(k, _)| k);
    done.into_iter().map(|(_, r)| r).collect()
}

/// CSV with the [`HEADER`] row, written even when `records` is empty.
pub fn write_records<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::Csv(e.into()))?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(CliError::Invalid(format!("unexpected record header {header:?}")));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
