//! Command-line front end: build-and-solve subcommands, benchmark sweeps
//! and performance profiles.
//!
//! Exit codes: 0 when a solve converges (or a sweep/profile completes),
//! 2 when the solver stops short of its tolerances, 1 on bad input.

pub mod bench;
pub mod error;
pub mod input;
pub mod profile;
pub mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lrsdp::alm::write_telemetry;
use lrsdp::{solve, SolverConfig};

use crate::bench::{load_manifest, read_records, run_bench, write_records, BenchOptions, Variant};
use crate::error::{CliError, Result};
use crate::input::{load, Format, Kind};
use crate::profile::{perf_profile, Metric};
use crate::report::{round, SolveReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_STALL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lrsdp",
    version,
    about = "Low-rank solver for trace-bounded semidefinite programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Max cut relaxation of a graph.
    Maxcut(SolveArgs),
    /// Minimum bisection relaxation of a graph.
    Minbisect(SolveArgs),
    /// Lovasz theta number of a graph.
    Theta(SolveArgs),
    /// Cut norm relaxation of a matrix.
    Cutnorm(SolveArgs),
    /// Nuclear-norm matrix completion from observed entries.
    Matcomp(SolveArgs),
    /// Run every manifest entry under each solver variant and write CSV.
    Bench(BenchArgs),
    /// Performance profile of a bench CSV.
    Profile(ProfileArgs),
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Target for both relative infeasibility and relative suboptimality.
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    /// Overrides the infeasibility target.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Overrides the suboptimality target.
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub rank0: usize,
    /// Keep this rank throughout instead of doubling.
    #[arg(long, value_name = "R")]
    pub fixed_rank: Option<usize>,
    /// Stop on feasibility alone without checking suboptimality.
    #[arg(long)]
    pub no_early_termination: bool,
    #[arg(long, env = "SDPLR_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock limit in seconds, checked between outer iterations.
    #[arg(long, alias = "timeout", value_name = "SECONDS")]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig {
            rank_init: self.rank0,
            fixed_rank: self.fixed_rank,
            early_termination: !self.no_early_termination,
            time_limit: self.time_limit,
            ..SolverConfig::default()
                .with_tolerance(self.tol)
                .with_seed(self.seed)
        };
        if let Some(w) = self.omega {
            cfg.omega_star = w;
        }
        if let Some(x) = self.xi {
            cfg.xi_star = x;
        }
        if let Some(m) = self.max_outer {
            cfg.max_outer = m;
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    pub format: Format,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Replace the default trace bound.
    #[arg(long)]
    pub trace_bound: Option<f64>,
    /// Write per-iteration telemetry as JSON lines.
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
    /// Hyperplane rounding trials (0 = none).
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub round: usize,
    /// Use absolute edge weights.
    #[arg(long)]
    pub abs_weights: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Lines of `id kind path`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated: dynamic, fixed-rank, fixed-rank-R, no-early-termination.
    #[arg(long, value_delimiter = ',', default_value = "dynamic")]
    pub variants: Vec<Variant>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    pub format: Format,
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub round: usize,
    #[arg(long)]
    pub abs_weights: bool,
    /// Runs in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// CSV destination (standard output by default).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// CSV written by `bench`.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::Time)]
    pub metric: Metric,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn finish(mut out: impl Write, path: Option<&Path>) -> Result<()> {
    out.flush()
        .map_err(|e| CliError::io(path.unwrap_or(Path::new("<stdout>")), e))
}

fn run_solve(kind: Kind, args: &SolveArgs) -> Result<i32> {
    let cfg = args.solver.config();
    cfg.validate()?;
    if args.round > 0 && kind.rounding_maximizes().is_none() {
        return Err(CliError::Invalid(format!("rounding is not defined for {kind}")));
    }
    let inst = load(kind, &args.input, args.format, args.abs_weights, args.trace_bound)?;
    let res = solve(&inst.problem, &cfg)?;
    if let Some(path) = &args.log {
        let mut w = create(path)?;
        write_telemetry(&res.telemetry, &mut w).map_err(|e| CliError::io(path, e))?;
        finish(w, Some(path))?;
    }
    let rounding = round(&inst, &res, args.round, cfg.seed)?;
    let report = SolveReport::new(&inst, &args.input.display().to_string(), cfg.seed, &res, rounding);
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out).map_err(|e| CliError::io("<stdout>", e))?;
    Ok(if res.status.is_converged() {
        EXIT_OK
    } else {
        EXIT_STALL
    })
}

fn run_bench_cmd(args: &BenchArgs) -> Result<i32> {
    let base = args.solver.config();
    base.validate()?;
    let entries = load_manifest(&args.manifest)?;
    let opts = BenchOptions {
        base,
        format: args.format,
        abs_weights: args.abs_weights,
        round: args.round,
        jobs: args.jobs,
    };
    let records = run_bench(&entries, &args.variants, &opts);
    let path = args.output.as_deref();
    let mut out = output(path)?;
    write_records(&records, &mut out)?;
    finish(out, path)?;
    Ok(EXIT_OK)
}

fn run_profile(args: &ProfileArgs) -> Result<i32> {
    let file = File::open(&args.records).map_err(|e| CliError::io(&args.records, e))?;
    let profile = perf_profile(&read_records(file)?, args.metric)?;
    let path = args.output.as_deref();
    let mut w = csv::Writer::from_writer(output(path)?);
    for point in profile.table() {
        w.serialize(point)?;
    }
    let out = w
        .into_inner()
        .map_err(|e| CliError::io("<output>", e.into_error()))?;
    finish(out, path)?;
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Maxcut(a) => run_solve(Kind::Maxcut, a),
        Command::Minbisect(a) => run_solve(Kind::Minbisect, a),
        Command::Theta(a) => run_solve(Kind::Theta, a),
        Command::Cutnorm(a) => run_solve(Kind::Cutnorm, a),
        Command::Matcomp(a) => run_solve(Kind::Matcomp, a),
        Command::Bench(a) => run_bench_cmd(a),
        Command::Profile(a) => run_profile(a),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("lrsdp: {e}");
            EXIT_INPUT
        }
    }
}
