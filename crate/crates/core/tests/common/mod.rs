#![allow(dead_code)]

//! Dense reference implementations shared by the integration tests.

use lrsdp::subsolver::{alm_gradient, alm_value};
use lrsdp::{Constraint, Cost, Factor, Problem, SparseSym};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn dense_sym(s: &SparseSym) -> DMatrix<f64> {
    let n = s.dim();
    let mut m = DMatrix::zeros(n, n);
    for &(i, j, v) in s.entries() {
        m[(i, j)] += v;
        if i != j {
            m[(j, i)] += v;
        }
    }
    m
}

/// Dense matrix of a constraint, built from its definition rather than
/// from the library's sparse conversion.
pub fn dense_constraint(c: &Constraint, n: usize) -> DMatrix<f64> {
    use lrsdp::ConstraintKind::*;
    match &c.kind {
        Diag(i) => {
            let mut m = DMatrix::zeros(n, n);
            m[(*i, *i)] = 1.0;
            m
        }
        UnitOffDiag(i, j) => {
            let mut m = DMatrix::zeros(n, n);
            m[(*i, *j)] = 0.5;
            m[(*j, *i)] = 0.5;
            m
        }
        RankOne(d) => {
            let v = nalgebra::DVector::from_column_slice(d);
            &v * v.transpose()
        }
        Trace => DMatrix::identity(n, n),
        General(s) => dense_sym(s),
    }
}

pub fn dense_cost(c: &Cost, n: usize) -> DMatrix<f64> {
    match c {
        Cost::Sparse(s) => dense_sym(s),
        Cost::RankOne { weight, vector } => {
            let v = nalgebra::DVector::from_column_slice(vector);
            (&v * v.transpose()) * *weight
        }
    }
    .resize(n, n, 0.0)
}

pub fn dense_factor(y: &Factor) -> DMatrix<f64> {
    DMatrix::from_column_slice(y.rows(), y.rank(), y.data())
}

pub fn gram(y: &Factor) -> DMatrix<f64> {
    let d = dense_factor(y);
    &d * d.transpose()
}

pub fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Dense `C - sum_i lambda_i A_i` in the problem's canonical (minimize) sense.
pub fn dense_dual_matrix(p: &Problem, lambda: &[f64]) -> DMatrix<f64> {
    let n = p.dim();
    let mut s = dense_cost(p.cost(), n);
    for (c, l) in p.constraints().iter().zip(lambda) {
        s -= dense_constraint(c, n) * *l;
    }
    s
}

/// Dense augmented Lagrangian value.
pub fn dense_alm_value(p: &Problem, y: &Factor, lambda: &[f64], sigma: f64) -> f64 {
    let n = p.dim();
    let x = gram(y);
    let obj = inner(&dense_cost(p.cost(), n), &x);
    let viol: Vec<f64> = p
        .constraints()
        .iter()
        .map(|c| inner(&dense_constraint(c, n), &x) - c.rhs)
        .collect();
    let lin: f64 = lambda.iter().zip(&viol).map(|(l, v)| l * v).sum();
    let sq: f64 = viol.iter().map(|v| v * v).sum();
    obj - lin + 0.5 * sigma * sq
}

pub fn random_sparse(rng: &mut impl Rng, n: usize, density: f64) -> SparseSym {
    let mut trips = Vec::new();
    for i in 0..n {
        for j in i..n {
            if rng.random::<f64>() < density {
                trips.push((i, j, gauss(rng)));
            }
        }
    }
    SparseSym::from_triplets(n, trips).unwrap()
}

/// One constraint of every kind plus a few extra random ones.
pub fn random_constraints(rng: &mut impl Rng, n: usize, m_extra: usize) -> Vec<Constraint> {
    assert!(n >= 2);
    let pick_pair = |rng: &mut dyn rand::RngCore| {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        (i, j)
    };
    let mut cons = vec![
        Constraint::diag(rng.random_range(0..n), gauss(rng)),
        {
            let (i, j) = pick_pair(rng);
            Constraint::unit_off_diag(i, j, gauss(rng))
        },
        Constraint::rank_one((0..n).map(|_| gauss(rng)).collect(), gauss(rng)),
        Constraint::trace(gauss(rng).abs() + 0.5),
        Constraint::general(random_sparse(rng, n, 0.3), gauss(rng)),
    ];
    for _ in 0..m_extra {
        let c = match rng.random_range(0..5) {
            0 => Constraint::diag(rng.random_range(0..n), gauss(rng)),
            1 => {
                let (i, j) = pick_pair(rng);
                Constraint::unit_off_diag(i, j, gauss(rng))
            }
            2 => Constraint::rank_one((0..n).map(|_| gauss(rng)).collect(), gauss(rng)),
            3 => Constraint::trace(gauss(rng)),
            _ => Constraint::general(random_sparse(rng, n, 0.3), gauss(rng)),
        };
        cons.push(c);
    }
    cons
}

pub fn random_cost(rng: &mut impl Rng, n: usize) -> Cost {
    if rng.random_bool(0.5) {
        Cost::Sparse(random_sparse(rng, n, 0.4))
    } else {
        Cost::RankOne {
            weight: gauss(rng),
            vector: (0..n).map(|_| gauss(rng)).collect(),
        }
    }
}

/// Random problem touching every constraint kind and either cost kind.
pub fn random_problem(rng: &mut impl Rng, n: usize, m_extra: usize) -> Problem {
    let cost = random_cost(rng, n);
    let cons = random_constraints(rng, n, m_extra);
    let alpha = 1.0 + 4.0 * rng.random::<f64>();
    if rng.random_bool(0.5) {
        Problem::minimize(cost, cons, alpha).unwrap()
    } else {
        Problem::maximize(cost, cons, alpha).unwrap()
    }
}

pub fn random_factor(rng: &mut impl Rng, n: usize, r: usize) -> Factor {
    Factor::from_fn(n, r, |_, _| gauss(rng))
}

pub fn random_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| gauss(rng)).collect()
}

/// Erdos-Renyi `G(n, p)` with unit weights.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> lrsdp::Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v, 1.0));
            }
        }
    }
    lrsdp::Graph::new(n, edges).unwrap()
}

/// Exhaustive `max_{S, T} |sum_{i in S, j in T} A_ij|`.
pub fn brute_force_cut_norm(a: &lrsdp::RectMatrix) -> f64 {
    let (m, n) = (a.rows(), a.cols());
    let mut best = 0.0f64;
    for smask in 0u32..(1 << m) {
        // column sums restricted to S; the best T takes all positive or all negative ones
        let mut pos = 0.0;
        let mut neg = 0.0;
        for j in 0..n {
            let s: f64 = (0..m).filter(|i| smask >> i & 1 == 1).map(|i| a.get(i, j)).sum();
            if s > 0.0 {
                pos += s;
            } else {
                neg -= s;
            }
        }
        best = best.max(pos).max(neg);
    }
    best
}

/// Exhaustive `max_{S, T}` over both masks, without the column shortcut.
pub fn brute_force_cut_norm_full(a: &lrsdp::RectMatrix) -> f64 {
    let (m, n) = (a.rows(), a.cols());
    let mut best = 0.0f64;
    for smask in 0u32..(1 << m) {
        for tmask in 0u32..(1 << n) {
            let mut s = 0.0;
            for i in (0..m).filter(|i| smask >> i & 1 == 1) {
                for j in (0..n).filter(|j| tmask >> j & 1 == 1) {
                    s += a.get(i, j);
                }
            }
            best = best.max(f64::abs(s));
        }
    }
    best
}

/// Central finite-difference gradient of the augmented Lagrangian.
pub fn fd_gradient(p: &Problem, y: &Factor, lambda: &[f64], sigma: f64, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; y.data().len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let mut plus = y.clone();
        plus.data_mut()[idx] += h;
        let mut minus = y.clone();
        minus.data_mut()[idx] -= h;
        *o = (alm_value(p, &plus, lambda, sigma).unwrap() - alm_value(p, &minus, lambda, sigma).unwrap())
            / (2.0 * h);
    }
    out
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

/// Random problem, point and strictly descending direction.
pub struct LineCase {
    pub p: Problem,
    pub y: Factor,
    pub d: Factor,
    pub lambda: Vec<f64>,
    pub sigma: f64,
}

pub fn line_case(seed: u64) -> LineCase {
    let mut rn = rng(seed);
    let n = rn.random_range(2..10);
    let r = rn.random_range(1..4);
    let p = random_problem(&mut rn, n, 2);
    let y = random_factor(&mut rn, n, r);
    let lambda = random_vec(&mut rn, p.num_constraints());
    let sigma = rn.random_range(0.5..10.0);
    let g = alm_gradient(&p, &y, &lambda, sigma).unwrap();
    let noise = random_factor(&mut rn, n, r);
    let gn = g.fro_norm_sq().sqrt();
    let mut d: Vec<f64> = g
        .data()
        .iter()
        .zip(noise.data())
        .map(|(a, b)| -a + 0.3 * gn * b / (n * r) as f64)
        .collect();
    let gd: f64 = d.iter().zip(g.data()).map(|(a, b)| a * b).sum();
    if gd >= 0.0 {
        d = g.data().iter().map(|v| -v).collect();
    }
    let d = Factor::from_col_major(n, r, d).unwrap();
    LineCase {
        p,
        y,
        d,
        lambda,
        sigma,
    }
}

pub fn phi(c: &LineCase, t: f64) -> f64 {
    let mut yt = c.y.clone();
    for (a, b) in yt.data_mut().iter_mut().zip(c.d.data()) {
        *a += t * b;
    }
    alm_value(&c.p, &yt, &c.lambda, c.sigma).unwrap()
}

/// Grid scan with `points` samples over `(0, hi]`, then a second scan of
/// the same size around the best grid point.
pub fn scan_minimum(c: &LineCase, hi: f64, points: usize) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    let h = hi / points as f64;
    for k in 1..=points {
        let t = h * k as f64;
        let v = phi(c, t);
        if v < best.0 {
            best = (v, t);
        }
    }
    let (lo, up) = ((best.1 - h).max(0.0), best.1 + h);
    let hh = (up - lo) / points as f64;
    for k in 1..=points {
        let t = lo + hh * k as f64;
        let v = phi(c, t);
        if v < best.0 {
            best = (v, t);
        }
    }
    best
}

/// The 3x3 duality-gap instance: minimize `X_01` subject to
/// `X_02 = 0`, `X_12 = 0`, `X_00 = 0`, `2 X_01 - 2 X_22 = -2`.
pub fn duality_gap_problem(trace_bound: f64) -> Problem {
    let cost = Cost::Sparse(SparseSym::from_triplets(3, [(0, 1, 0.5)]).unwrap());
    let cons = vec![
        Constraint::general(SparseSym::from_triplets(3, [(0, 2, 1.0)]).unwrap(), 0.0),
        Constraint::general(SparseSym::from_triplets(3, [(1, 2, 1.0)]).unwrap(), 0.0),
        Constraint::diag(0, 0.0),
        Constraint::general(
            SparseSym::from_triplets(3, [(0, 1, 1.0), (2, 2, -2.0)]).unwrap(),
            -2.0,
        ),
    ];
    Problem::minimize(cost, cons, trace_bound).unwrap()
}

/// Checks the outer-loop bookkeeping recorded in `res.telemetry`;
/// returns a description of the first violation.
pub fn telemetry_violation(
    p: &Problem,
    cfg: &lrsdp::SolverConfig,
    res: &lrsdp::SolveResult,
) -> Option<String> {
    let cap = cfg.fixed_rank.unwrap_or_else(|| p.rank_cap());
    let tel = &res.telemetry;
    if tel.is_empty() {
        return None;
    }
    if tel[0].sigma != cfg.sigma0 {
        return Some(format!("initial penalty {}", tel[0].sigma));
    }
    for (k, w) in tel.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if b.t != a.t + 1 {
            return Some(format!("iteration count jumps at record {k}"));
        }
        let want_sigma = if a.dual_updated { a.sigma } else { 2.0 * a.sigma };
        if b.sigma != want_sigma {
            return Some(format!(
                "penalty {} -> {} (dual update {})",
                a.sigma, b.sigma, a.dual_updated
            ));
        }
        if b.rank != a.rank && b.rank != (2 * a.rank).min(cap) {
            return Some(format!("rank {} -> {}", a.rank, b.rank));
        }
    }
    for rec in tel {
        if rec.rank > cap {
            return Some(format!("rank {} above cap {cap}", rec.rank));
        }
        if rec.gamma > cfg.gamma0 {
            return Some(format!("rank counter {}", rec.gamma));
        }
        if rec.xi.is_some() && rec.omega > cfg.omega_star {
            return Some("suboptimality evaluated before infeasibility target".into());
        }
    }
    if res.rank > cap {
        return Some(format!("final rank {} above cap {cap}", res.rank));
    }
    None
}
