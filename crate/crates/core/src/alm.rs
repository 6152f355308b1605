//! Outer augmented Lagrangian loop with suboptimality-based termination
//! and dynamic rank doubling.
//!
//! Each outer iteration minimizes the augmented Lagrangian in `Y` to the
//! current stationarity tolerance, then either updates the dual estimate
//! (constraint violation small enough) or doubles the penalty. Once the
//! violation meets the user target, the trace-bounded dual gives a
//! computable bound on `<C, X> - <C, X*>`:
//!
//! ```text
//! <C, Y Y^T> - lambda^T b - alpha * min(lambda_min(C - A*(lambda)), 0)
//! ```
//!
//! which holds for every `lambda`. Repeated failures of that bound shrink
//! a counter; when it reaches zero the rank doubles (up to
//! `floor(sqrt(2m) + 1)`).

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::lanczos::{min_eig, step_budget};
use crate::linalg::{dot, norm, Factor};
use crate::model::Problem;
use crate::subsolver::{evaluate, lbfgs_minimize, stationarity, LbfgsOptions};

/// Lower limit for the stationarity and infeasibility schedules.
const TOLERANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolverConfig {
    /// Target relative primal infeasibility.
    pub omega_star: f64,
    /// Target relative suboptimality.
    pub xi_star: f64,
    pub rank_init: usize,
    /// Run at this rank throughout; disables doubling.
    pub fixed_rank: Option<usize>,
    /// When false, stop as soon as the infeasibility target is met and
    /// never evaluate the suboptimality bound.
    pub early_termination: bool,
    /// Keep `Tr(Y Y^T) <= alpha` inside the inner solver.
    pub enforce_trace_bound: bool,
    pub sigma0: f64,
    /// Suboptimality failures tolerated before the rank doubles.
    pub gamma0: usize,
    pub lbfgs_history: usize,
    pub max_inner: usize,
    pub max_outer: usize,
    /// Wall-clock budget in seconds, checked between outer iterations.
    pub time_limit: Option<f64>,
    pub sigma_cap: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            omega_star: 1e-2,
            xi_star: 1e-2,
            rank_init: 10,
            fixed_rank: None,
            early_termination: true,
            enforce_trace_bound: true,
            sigma0: 2.0,
            gamma0: 4,
            lbfgs_history: 4,
            max_inner: 10_000,
            max_outer: 10_000,
            time_limit: None,
            sigma_cap: 1e10,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Sets both the infeasibility and suboptimality targets.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.omega_star = tol;
        self.xi_star = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if !(self.omega_star > 0.0) || !(self.xi_star > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.rank_init == 0 || self.fixed_rank == Some(0) {
            return bad("rank must be at least 1");
        }
        if !(self.sigma0 > 0.0) || !(self.sigma_cap >= self.sigma0) {
            return bad("penalty must satisfy 0 < sigma0 <= sigma_cap");
        }
        if self.gamma0 == 0 || self.lbfgs_history == 0 {
            return bad("gamma0 and lbfgs_history must be positive");
        }
        if matches!(self.time_limit, Some(t) if !(t >= 0.0)) {
            return bad("time limit must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    RankCapStall,
    SigmaCapStall,
    MaxOuter,
    TimeLimit,
}

impl Status {
    pub fn is_converged(self) -> bool {
        self == Status::Converged
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Converged => "Converged",
            Status::RankCapStall => "RankCapStall",
            Status::SigmaCapStall => "SigmaCapStall",
            Status::MaxOuter => "MaxOuter",
            Status::TimeLimit => "TimeLimit",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Converged" => Status::Converged,
            "RankCapStall" => Status::RankCapStall,
            "SigmaCapStall" => Status::SigmaCapStall,
            "MaxOuter" => Status::MaxOuter,
            "TimeLimit" => Status::TimeLimit,
            other => return Err(Error::InvalidInput(format!("unknown status {other:?}"))),
        })
    }
}

/// One outer iteration, recorded after its primal/dual/penalty update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based outer iteration.
    pub t: usize,
    pub rank: usize,
    /// Penalty used by this iteration's inner solve.
    pub sigma: f64,
    pub eta: f64,
    pub omega: f64,
    pub xi: Option<f64>,
    pub inner_iterations: usize,
    pub inner_stalled: bool,
    pub dual_updated: bool,
    pub gamma: usize,
    /// Seconds since the solve started.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub y: Factor,
    pub lambda: Vec<f64>,
    /// Objective in the user's sense.
    pub objective: f64,
    pub eta: f64,
    pub omega: f64,
    pub xi: f64,
    /// Absolute bound on `<C, X> - <C, X*>` (canonical sense).
    pub suboptimality_bound: f64,
    /// Bound on the optimum in the user's sense: a lower bound for
    /// minimization, an upper bound for maximization.
    pub dual_bound: f64,
    pub status: Status,
    pub rank: usize,
    pub outer_iterations: usize,
    pub wall_seconds: f64,
    pub telemetry: Vec<IterationRecord>,
}

/// Writes one JSON object per line.
pub fn write_telemetry<W: Write>(records: &[IterationRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub eta: f64,
    pub omega: f64,
    pub xi: f64,
    pub lambda_min: f64,
}

/// `||A(Y Y^T) - b|| / (1 + ||b||)`.
pub fn primal_infeasibility(p: &Problem, y: &Factor) -> Result<f64> {
    let a = p.apply_a(y)?;
    let viol: Vec<f64> = a.iter().zip(p.rhs()).map(|(x, b)| x - b).collect();
    Ok(norm(&viol) / (1.0 + norm(p.rhs())))
}

/// Lanczos estimate of `lambda_min(C - A*(lambda))`.
pub fn dual_min_eig(p: &Problem, lambda: &[f64], steps: usize, seed: u64) -> Result<f64> {
    check_dim("dual_min_eig (lambda)", p.num_constraints(), lambda.len())?;
    let est = min_eig(|x, out| p.astar_matvec_into(lambda, x, out), p.dim(), steps, seed);
    Ok(est.value)
}

/// Trace-bounded dual objective `lambda^T b + alpha * min(lambda_min, 0)`.
pub fn dual_value(p: &Problem, lambda: &[f64], lambda_min: f64) -> f64 {
    dot(lambda, p.rhs()) + p.trace_bound() * lambda_min.min(0.0)
}

/// Suboptimality bound for a given `lambda_min(C - A*(lambda))`.
pub fn bound_from_lambda_min(p: &Problem, y: &Factor, lambda: &[f64], lambda_min: f64) -> Result<f64> {
    check_dim("suboptimality bound (lambda)", p.num_constraints(), lambda.len())?;
    Ok(p.objective(y)? - dual_value(p, lambda, lambda_min))
}

/// `<C, Y Y^T> - lambda^T b - alpha * min(lambda_min(C - A*(lambda)), 0)`,
/// with `lambda_min` from `steps` Lanczos iterations.
pub fn suboptimality_bound(p: &Problem, y: &Factor, lambda: &[f64], steps: usize, seed: u64) -> Result<f64> {
    let lmin = dual_min_eig(p, lambda, steps, seed)?;
    bound_from_lambda_min(p, y, lambda, lmin)
}

/// The Frank-Wolfe surrogate gap of the augmented Lagrangian,
/// `<C, YY^T> - b^T lambda' + (sigma/2)||p||^2 - alpha * min(lambda_min(C - A*(lambda')), 0)`
/// with `p = A(YY^T) - b` and `lambda' = lambda - sigma p`. Diagnostic only:
/// it exceeds [`suboptimality_bound`] at `lambda'` by exactly `(sigma/2)||p||^2`.
pub fn surrogate_bound(
    p: &Problem,
    y: &Factor,
    lambda: &[f64],
    sigma: f64,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    check_dim("surrogate bound (lambda)", p.num_constraints(), lambda.len())?;
    let a = p.apply_a(y)?;
    let viol: Vec<f64> = a.iter().zip(p.rhs()).map(|(x, b)| x - b).collect();
    let shifted: Vec<f64> = lambda.iter().zip(&viol).map(|(l, v)| l - sigma * v).collect();
    let lmin = dual_min_eig(p, &shifted, steps, seed)?;
    Ok(
        p.objective(y)? - dot(p.rhs(), &shifted) + 0.5 * sigma * dot(&viol, &viol)
            - p.trace_bound() * lmin.min(0.0),
    )
}

/// Relative stationarity, infeasibility and suboptimality at `(Y, lambda)`.
pub fn metrics(
    p: &Problem,
    y: &Factor,
    lambda: &[f64],
    sigma: f64,
    lanczos_steps: usize,
    seed: u64,
) -> Result<Metrics> {
    let state = evaluate(p, y, lambda, sigma)?;
    let eta = stationarity(p, &state.grad);
    let omega = norm(&state.violation) / (1.0 + norm(p.rhs()));
    let lambda_min = dual_min_eig(p, lambda, lanczos_steps, seed)?;
    let bound = state.objective - dual_value(p, lambda, lambda_min);
    Ok(Metrics {
        eta,
        omega,
        xi: bound / (1.0 + state.objective.abs()),
        lambda_min,
    })
}

/// Relative suboptimality `xi` with its absolute bound.
fn relative_suboptimality(
    p: &Problem,
    y: &Factor,
    lambda: &[f64],
    steps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let obj = p.objective(y)?;
    let lmin = dual_min_eig(p, lambda, steps, seed)?;
    let bound = obj - dual_value(p, lambda, lmin);
    Ok((bound / (1.0 + obj.abs()), lmin))
}

fn lanczos_seed(seed: u64, t: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (t as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Solves the trace-bounded SDP `p`.
pub fn solve(p: &Problem, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let start = Instant::now();
    let n = p.dim();
    let m = p.num_constraints();
    let rank_limit = cfg.fixed_rank.unwrap_or_else(|| p.rank_cap());
    let mut rank = cfg.fixed_rank.unwrap_or(cfg.rank_init.min(rank_limit));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let init_std = (p.trace_bound() / (n.max(1) * rank) as f64).sqrt() / 2.0;
    let mut y = Factor::gaussian(n, rank, init_std, &mut rng);
    let mut lambda = vec![0.0; m];
    let mut sigma = cfg.sigma0;
    let mut eta_t = 1.0 / sigma;
    let mut omega_t = 1.0 / sigma.powf(0.1);
    let mut gamma = cfg.gamma0;
    let mut cap_exhausted = 0usize;
    let b_norm = norm(p.rhs());
    let inner_opts = LbfgsOptions {
        history: cfg.lbfgs_history,
        max_inner: cfg.max_inner,
        trace_bound: cfg.enforce_trace_bound.then(|| p.trace_bound()),
    };

    let mut telemetry = Vec::new();
    let mut last_eta = f64::INFINITY;
    let mut last_omega = f64::INFINITY;
    let mut final_xi: Option<(f64, f64)> = None;
    let mut t = 0usize;

    let status = loop {
        if t >= cfg.max_outer {
            break Status::MaxOuter;
        }
        if let Some(limit) = cfg.time_limit {
            if start.elapsed().as_secs_f64() >= limit {
                break Status::TimeLimit;
            }
        }
        t += 1;

        let inner = lbfgs_minimize(p, &y, &lambda, sigma, eta_t, inner_opts)?;
        y = inner.y;
        let viol: Vec<f64> = p.apply_a(&y)?.iter().zip(p.rhs()).map(|(a, b)| a - b).collect();
        let omega = norm(&viol) / (1.0 + b_norm);
        last_eta = inner.eta;
        last_omega = omega;

        let mut record = IterationRecord {
            t,
            rank,
            sigma,
            eta: inner.eta,
            omega,
            xi: None,
            inner_iterations: inner.iterations,
            inner_stalled: inner.stalled,
            dual_updated: false,
            gamma,
            wall_seconds: 0.0,
        };

        if omega <= omega_t {
            if omega <= cfg.omega_star {
                if !cfg.early_termination {
                    record.wall_seconds = start.elapsed().as_secs_f64();
                    telemetry.push(record);
                    break Status::Converged;
                }
                let steps = step_budget(t, n);
                let (xi, lmin) = relative_suboptimality(p, &y, &lambda, steps, lanczos_seed(cfg.seed, t))?;
                record.xi = Some(xi);
                if xi <= cfg.xi_star {
                    final_xi = Some((xi, lmin));
                    record.wall_seconds = start.elapsed().as_secs_f64();
                    telemetry.push(record);
                    break Status::Converged;
                }
                gamma -= 1;
            }
            for (l, v) in lambda.iter_mut().zip(&viol) {
                *l -= sigma * v;
            }
            record.dual_updated = true;
            eta_t = (eta_t / sigma).max(TOLERANCE_FLOOR);
            omega_t = (omega_t / sigma.powf(0.9)).max(TOLERANCE_FLOOR);
        } else {
            sigma *= 2.0;
            if sigma > cfg.sigma_cap {
                record.wall_seconds = start.elapsed().as_secs_f64();
                telemetry.push(record);
                break Status::SigmaCapStall;
            }
            eta_t = 1.0 / sigma;
            omega_t = 1.0 / sigma.powf(0.1);
        }

        record.gamma = gamma;
        record.wall_seconds = start.elapsed().as_secs_f64();
        telemetry.push(record);

        if gamma == 0 {
            gamma = cfg.gamma0;
            if rank >= rank_limit {
                cap_exhausted += 1;
                if cap_exhausted >= 2 {
                    break Status::RankCapStall;
                }
            } else {
                let new_rank = (2 * rank).min(rank_limit);
                let scale = y.fro_norm_sq().sqrt();
                let std = if scale > 0.0 {
                    1e-2 * scale / ((n * rank) as f64).sqrt()
                } else {
                    1e-2 * init_std
                };
                y.append_columns(&Factor::gaussian(n, new_rank - rank, std, &mut rng))?;
                rank = new_rank;
            }
        }
    };

    let objective = p.objective(&y)?;
    let (xi, lambda_min) = match final_xi {
        Some(v) => v,
        None => relative_suboptimality(
            p,
            &y,
            &lambda,
            step_budget(t.max(1), n),
            lanczos_seed(cfg.seed, t),
        )?,
    };
    let dual = dual_value(p, &lambda, lambda_min);
    Ok(SolveResult {
        objective: p.user_value(objective),
        eta: last_eta,
        omega: if t == 0 {
            primal_infeasibility(p, &y)?
        } else {
            last_omega
        },
        xi,
        suboptimality_bound: objective - dual,
        dual_bound: p.user_value(dual),
        status,
        rank,
        outer_iterations: t,
        wall_seconds: start.elapsed().as_secs_f64(),
        telemetry,
        y,
        lambda,
    })
}
