//! Augmented Lagrangian in the factor `Y` and its L-BFGS minimizer.
//!
//! ```text
//! f(Y) = <C, Y Y^T> - lambda^T v + (sigma / 2) ||v||^2,   v = A(Y Y^T) - b
//! grad f(Y) = 2 (C - A*(lambda - sigma v)) Y
//! ```
//!
//! Along a direction `D`, `f(Y + t D)` is a quartic in `t`, so the line
//! search is exact: the minimizer is a root of a cubic.

use std::collections::VecDeque;

use crate::error::{check_dim, Result};
use crate::linalg::{axpy, dot, norm, Factor};
use crate::model::Problem;

/// Upper end of the line-search bracket.
pub const T_MAX: f64 = 1e6;

const CURVATURE_EPS: f64 = 1e-12;
const STALL_REL_DECREASE: f64 = 1e-14;
const STALL_PATIENCE: usize = 20;
/// Relative slack for treating an iterate as on the trace-bound sphere.
const BOUNDARY_TOL: f64 = 1e-10;
const BACKTRACK_LIMIT: usize = 40;

/// Augmented Lagrangian value and gradient at one point.
#[derive(Debug, Clone)]
pub struct AugLagScratch {
    /// Canonical objective `<C, Y Y^T>`.
    pub objective: f64,
    /// `A(Y Y^T) - b`.
    pub violation: Vec<f64>,
    /// `lambda - sigma * violation`.
    pub shifted_dual: Vec<f64>,
    pub value: f64,
    pub grad: Factor,
}

fn check_inputs(p: &Problem, y: &Factor, lambda: &[f64]) -> Result<()> {
    check_dim("augmented Lagrangian (Y rows)", p.dim(), y.rows())?;
    check_dim("augmented Lagrangian (lambda)", p.num_constraints(), lambda.len())
}

fn value_parts(p: &Problem, y: &Factor, lambda: &[f64], sigma: f64) -> (f64, Vec<f64>, f64) {
    let objective = p.cost().bilinear(y, y);
    let violation: Vec<f64> = p.constraints().iter().map(|c| c.evaluate(y) - c.rhs).collect();
    let value = objective - dot(lambda, &violation) + 0.5 * sigma * dot(&violation, &violation);
    (objective, violation, value)
}

pub fn alm_value(p: &Problem, y: &Factor, lambda: &[f64], sigma: f64) -> Result<f64> {
    check_inputs(p, y, lambda)?;
    Ok(value_parts(p, y, lambda, sigma).2)
}

pub fn alm_gradient(p: &Problem, y: &Factor, lambda: &[f64], sigma: f64) -> Result<Factor> {
    Ok(evaluate(p, y, lambda, sigma)?.grad)
}

/// Value and gradient in one pass.
pub fn evaluate(p: &Problem, y: &Factor, lambda: &[f64], sigma: f64) -> Result<AugLagScratch> {
    check_inputs(p, y, lambda)?;
    let (objective, violation, value) = value_parts(p, y, lambda, sigma);
    let shifted_dual: Vec<f64> = lambda
        .iter()
        .zip(&violation)
        .map(|(l, v)| l - sigma * v)
        .collect();
    let mut grad = Factor::zeros(y.rows(), y.rank());
    for k in 0..y.rank() {
        let out = grad.col_mut(k);
        p.astar_matvec_into(&shifted_dual, y.col(k), out);
        out.iter_mut().for_each(|g| *g *= 2.0);
    }
    Ok(AugLagScratch {
        objective,
        violation,
        shifted_dual,
        value,
        grad,
    })
}

/// Relative stationarity `||grad||_F / (1 + ||C||_F)`.
pub fn stationarity(p: &Problem, grad: &Factor) -> f64 {
    grad.fro_norm_sq().sqrt() / (1.0 + p.cost_fro_norm())
}

/// Coefficients `[c0, c1, c2, c3, c4]` of `phi(t) = f(Y + t D)`.
pub fn quartic_coefficients(
    p: &Problem,
    y: &Factor,
    d: &Factor,
    lambda: &[f64],
    sigma: f64,
) -> Result<[f64; 5]> {
    check_inputs(p, y, lambda)?;
    check_dim("line search direction (rows)", y.rows(), d.rows())?;
    check_dim("line search direction (rank)", y.rank(), d.rank())?;
    let (objective, violation, _) = value_parts(p, y, lambda, sigma);
    Ok(quartic_from_parts(p, y, d, lambda, sigma, objective, &violation))
}

fn quartic_from_parts(
    p: &Problem,
    y: &Factor,
    d: &Factor,
    lambda: &[f64],
    sigma: f64,
    objective: f64,
    violation: &[f64],
) -> [f64; 5] {
    // A((Y + tD)(Y + tD)^T) - b = e + f t + g t^2
    let (cost_cross, cross) = p.bilinear_terms(y, d);
    let (cost_dd, dd) = p.bilinear_terms(d, d);
    let e = violation;
    let f: Vec<f64> = cross.iter().map(|x| 2.0 * x).collect();
    let g = dd;
    [
        objective - dot(lambda, e) + 0.5 * sigma * dot(e, e),
        2.0 * cost_cross - dot(lambda, &f) + sigma * dot(e, &f),
        cost_dd - dot(lambda, &g) + 0.5 * sigma * (dot(&f, &f) + 2.0 * dot(e, &g)),
        sigma * dot(&f, &g),
        0.5 * sigma * dot(&g, &g),
    ]
}

pub fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearch {
    Step {
        t: f64,
        value: f64,
    },
    /// `phi'(0) >= 0`; the caller should restart from steepest descent.
    NotDescent,
}

/// Exact line search for `f(Y + t D)` over `t in (0, T_MAX]`.
pub fn exact_linesearch(
    p: &Problem,
    y: &Factor,
    d: &Factor,
    lambda: &[f64],
    sigma: f64,
) -> Result<LineSearch> {
    let coeffs = quartic_coefficients(p, y, d, lambda, sigma)?;
    Ok(minimize_quartic(&coeffs, T_MAX))
}

/// Global minimizer of a quartic over `(0, t_max]`, given `phi'(0) < 0`.
pub fn minimize_quartic(coeffs: &[f64; 5], t_max: f64) -> LineSearch {
    if !(coeffs[1] < 0.0) {
        return LineSearch::NotDescent;
    }
    let deriv = [coeffs[1], 2.0 * coeffs[2], 3.0 * coeffs[3], 4.0 * coeffs[4]];
    let mut best_t = t_max;
    let mut best = eval_poly(coeffs, t_max);
    for t in real_cubic_roots(&deriv) {
        if t > 0.0 && t <= t_max {
            let v = eval_poly(coeffs, t);
            if v < best {
                best = v;
                best_t = t;
            }
        }
    }
    LineSearch::Step {
        t: best_t,
        value: best,
    }
}

/// Real roots of `c0 + c1 x + c2 x^2 + c3 x^3`, polished by Newton.
pub fn real_cubic_roots(c: &[f64; 4]) -> Vec<f64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut roots = if c[3].abs() > 1e-14 * scale {
        cardano(c[2] / c[3], c[1] / c[3], c[0] / c[3])
    } else if c[2].abs() > 1e-14 * scale {
        quadratic_roots(c[2], c[1], c[0])
    } else if c[1] != 0.0 {
        vec![-c[0] / c[1]]
    } else {
        Vec::new()
    };
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let fx = eval_poly(c, *r);
            let dfx = c[1] + 2.0 * c[2] * *r + 3.0 * c[3] * *r * *r;
            if dfx != 0.0 {
                let next = *r - fx / dfx;
                if next.is_finite() && eval_poly(c, next).abs() <= fx.abs() {
                    *r = next;
                }
            }
        }
    }
    roots
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    // avoids cancellation between -b and sqrt(disc)
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut out = Vec::with_capacity(2);
    if q != 0.0 {
        out.push(q / a);
        out.push(c / q);
    } else {
        out.push(0.0);
    }
    out
}

/// Real roots of the monic cubic `x^3 + a x^2 + b x + c`.
fn cardano(a: f64, b: f64, c: f64) -> Vec<f64> {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        vec![u + v - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub history: usize,
    pub max_inner: usize,
    /// Keeps iterates inside `||Y||_F^2 <= bound` (the trace bound on
    /// `Y Y^T`) when set.
    pub trace_bound: Option<f64>,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            history: 4,
            max_inner: 10_000,
            trace_bound: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub y: Factor,
    pub value: f64,
    /// Relative stationarity at `y` (of the projected gradient when a
    /// trace bound is active).
    pub eta: f64,
    pub iterations: usize,
    /// Progress stopped before reaching the target.
    pub stalled: bool,
}

impl InnerResult {
    pub fn reached(&self, eta_target: f64) -> bool {
        self.eta <= eta_target
    }
}

struct History {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    capacity: usize,
    skipped_in_row: usize,
}

impl History {
    fn new(capacity: usize) -> Self {
        Self {
            pairs: VecDeque::with_capacity(capacity),
            capacity,
            skipped_in_row: 0,
        }
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= CURVATURE_EPS * norm(&s) * norm(&y) {
            self.skipped_in_row += 1;
            if self.skipped_in_row >= 2 {
                self.pairs.clear();
                self.skipped_in_row = 0;
            }
            return;
        }
        self.skipped_in_row = 0;
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion: returns `-H g`.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(-a, y, &mut q);
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            axpy(a - b, s, &mut q);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

/// The Frobenius ball `||Y||_F^2 <= radius_sq`.
#[derive(Debug, Clone, Copy)]
struct Ball {
    radius_sq: f64,
}

impl Ball {
    fn on_boundary(&self, y: &[f64]) -> bool {
        dot(y, y) >= self.radius_sq * (1.0 - BOUNDARY_TOL)
    }

    /// Scales `y` back onto the ball if it lies outside.
    fn project(&self, y: &mut [f64]) {
        let sq = dot(y, y);
        if sq > self.radius_sq {
            let s = (self.radius_sq / sq).sqrt();
            y.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Drops the outward radial part of `v` at a boundary point `y`.
    fn tangential(&self, y: &[f64], v: &mut [f64]) {
        let vy = dot(v, y);
        if vy > 0.0 {
            axpy(-vy / dot(y, y), y, v);
        }
    }

    /// Largest `t` with `y + t d` still inside (`y` strictly inside).
    fn exit_step(&self, y: &[f64], d: &[f64]) -> f64 {
        let dd = dot(d, d);
        let yd = dot(y, d);
        let slack = (self.radius_sq - dot(y, y)).max(0.0);
        if dd == 0.0 {
            return f64::INFINITY;
        }
        slack / (yd + (yd * yd + dd * slack).sqrt()).max(f64::MIN_POSITIVE)
    }
}

/// Gradient with the inward-pointing radial part removed at the boundary,
/// whose norm is the first-order optimality residual on the ball.
fn projected_gradient(ball: Option<Ball>, y: &[f64], g: &[f64]) -> Vec<f64> {
    let mut pg = g.to_vec();
    if let Some(ball) = ball {
        if ball.on_boundary(y) {
            // -g points outward iff <g, y> < 0
            pg.iter_mut().for_each(|v| *v = -*v);
            ball.tangential(y, &mut pg);
            pg.iter_mut().for_each(|v| *v = -*v);
        }
    }
    pg
}

/// Minimizes the augmented Lagrangian from `y0` until the relative
/// stationarity drops to `eta_target`, the iteration cap is hit, or
/// progress stalls.
pub fn lbfgs_minimize(
    p: &Problem,
    y0: &Factor,
    lambda: &[f64],
    sigma: f64,
    eta_target: f64,
    opts: LbfgsOptions,
) -> Result<InnerResult> {
    let (n, r) = (y0.rows(), y0.rank());
    let ball = opts.trace_bound.map(|radius_sq| Ball { radius_sq });
    let mut y = y0.clone();
    if let Some(ball) = ball {
        ball.project(y.data_mut());
    }
    let mut state = evaluate(p, &y, lambda, sigma)?;
    let scale = 1.0 + p.cost_fro_norm();
    let mut pg = projected_gradient(ball, y.data(), state.grad.data());
    let mut eta = norm(&pg) / scale;
    let mut history = History::new(opts.history.max(1));
    let mut iterations = 0;
    let mut slow_steps = 0;
    let mut stalled = false;

    while eta > eta_target && iterations < opts.max_inner {
        let boundary = ball.filter(|b| b.on_boundary(y.data()));
        let mut dir = history.direction(state.grad.data());
        if let Some(b) = boundary {
            b.tangential(y.data(), &mut dir);
        }
        if dot(&dir, &pg) >= 0.0 {
            history.pairs.clear();
            dir = pg.iter().map(|v| -v).collect();
        }
        let d = Factor::from_col_major(n, r, dir)?;
        let t_cap = match (ball, boundary) {
            (Some(b), None) => b.exit_step(y.data(), d.data()).min(T_MAX),
            _ => T_MAX,
        };
        let coeffs = quartic_from_parts(p, &y, &d, lambda, sigma, state.objective, &state.violation);
        let mut step = match minimize_quartic(&coeffs, t_cap) {
            LineSearch::Step { t, .. } => t,
            LineSearch::NotDescent if !history.pairs.is_empty() => {
                history.pairs.clear();
                continue;
            }
            LineSearch::NotDescent => {
                stalled = true;
                break;
            }
        };

        // Off the boundary the step stays inside the ball; on it, the
        // tangential step is pulled back by rescaling and shortened until
        // the value decreases.
        let mut accepted = None;
        for _ in 0..BACKTRACK_LIMIT {
            let mut y_next = y.clone();
            axpy(step, d.data(), y_next.data_mut());
            if let Some(b) = ball {
                b.project(y_next.data_mut());
            }
            let next = evaluate(p, &y_next, lambda, sigma)?;
            if next.value <= state.value {
                accepted = Some((y_next, next));
                break;
            }
            if boundary.is_none() {
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((y_next, next)) = accepted else {
            // rounding pushed us uphill; nothing left to gain at this scale
            stalled = true;
            break;
        };

        let decrease = (state.value - next.value) / state.value.abs().max(1.0);
        if decrease < STALL_REL_DECREASE {
            slow_steps += 1;
        } else {
            slow_steps = 0;
        }

        let s: Vec<f64> = y_next.data().iter().zip(y.data()).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = next
            .grad
            .data()
            .iter()
            .zip(state.grad.data())
            .map(|(a, b)| a - b)
            .collect();
        history.push(s, yk);

        y = y_next;
        state = next;
        pg = projected_gradient(ball, y.data(), state.grad.data());
        eta = norm(&pg) / scale;
        if slow_steps >= STALL_PATIENCE {
            stalled = true;
            break;
        }
    }

    Ok(InnerResult {
        y,
        value: state.value,
        eta,
        iterations,
        stalled,
    })
}
