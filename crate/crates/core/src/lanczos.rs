//! Matrix-free estimate of the smallest eigenvalue of a symmetric operator.
//!
//! Lanczos from a seeded Gaussian start with full reorthogonalization.
//! The tridiagonal projection is diagonalized with implicit QL.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{axpy, dot, norm};

/// Krylov breakdown threshold, relative to the running operator-norm estimate.
const BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct EigEstimate {
    /// Smallest Ritz value.
    pub value: f64,
    /// Unit-norm Ritz vector for `value`.
    pub vector: Vec<f64>,
    pub steps_used: usize,
}

/// Step budget `ceil(2 sqrt(t) ln n)` for the `t`-th (1-based) outer iteration.
pub fn step_budget(t: usize, n: usize) -> usize {
    let steps = (2.0 * (t.max(1) as f64).sqrt() * (n.max(1) as f64).ln()).ceil();
    (steps as usize).max(1)
}

/// Runs at most `min(steps, n)` Lanczos iterations of the symmetric
/// operator `op` (which writes `A x` into its second argument) and returns
/// the smallest Ritz pair.
pub fn min_eig<F>(mut op: F, n: usize, steps: usize, seed: u64) -> EigEstimate
where
    F: FnMut(&[f64], &mut [f64]),
{
    if n == 0 {
        return EigEstimate {
            value: 0.0,
            vector: Vec::new(),
            steps_used: 0,
        };
    }
    let max_steps = steps.max(1).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut alphas = Vec::with_capacity(max_steps);
    let mut betas: Vec<f64> = Vec::with_capacity(max_steps);
    let mut w = vec![0.0; n];
    let mut norm_est = 0.0f64;

    loop {
        op(&v, &mut w);
        let alpha = dot(&v, &w);
        axpy(-alpha, &v, &mut w);
        if let (Some(prev), Some(&beta)) = (basis.last(), betas.last()) {
            axpy(-beta, prev, &mut w);
        }
        basis.push(std::mem::take(&mut v));
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let beta = norm(&w);
        norm_est = norm_est.max(alpha.abs() + beta + betas.last().copied().unwrap_or(0.0));
        if alphas.len() == max_steps || beta <= BREAKDOWN_TOL * norm_est.max(1.0) {
            break;
        }
        betas.push(beta);
        v = w.iter().map(|x| x / beta).collect();
    }

    let k = alphas.len();
    let mut diag = alphas;
    let mut off = betas;
    off.truncate(k.saturating_sub(1));
    off.push(0.0);
    let mut z = vec![0.0; k * k];
    for i in 0..k {
        z[i * k + i] = 1.0;
    }
    tridiagonal_ql(&mut diag, &mut off, &mut z);

    let (imin, &value) = diag
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one Lanczos step");
    let mut vector = vec![0.0; n];
    for (j, q) in basis.iter().enumerate() {
        axpy(z[j * k + imin], q, &mut vector);
    }
    let nv = norm(&vector);
    if nv > 0.0 {
        vector.iter_mut().for_each(|x| *x /= nv);
    }
    EigEstimate {
        value,
        vector,
        steps_used: k,
    }
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by the implicit
/// QL method. On entry `diag` holds the diagonal, `off[i]` the entry
/// `(i, i+1)` with `off[k-1] = 0`, and `z` (row-major `k x k`) the
/// identity. On exit `diag` holds eigenvalues (unsorted) and column `i` of
/// `z` the eigenvector for `diag[i]`.
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], z: &mut [f64]) {
    let k = diag.len();
    let eps = f64::EPSILON;
    let mut shift_acc = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..k {
        tst1 = tst1.max(diag[l].abs() + off[l].abs());
        let mut m = l;
        while m < k - 1 && off[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                let g = diag[l];
                let mut p = (diag[l + 1] - g) / (2.0 * off[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                diag[l] = off[l] / (p + r);
                diag[l + 1] = off[l] * (p + r);
                let dl1 = diag[l + 1];
                let h = g - diag[l];
                for d in diag.iter_mut().skip(l + 2) {
                    *d -= h;
                }
                shift_acc += h;

                p = diag[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = off[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * off[i];
                    let h = c * p;
                    r = p.hypot(off[i]);
                    off[i + 1] = s * r;
                    s = off[i] / r;
                    c = p / r;
                    p = c * diag[i] - s * g;
                    diag[i + 1] = h + s * (c * g + s * diag[i]);
                    for row in 0..k {
                        let zi1 = z[row * k + i + 1];
                        let zi = z[row * k + i];
                        z[row * k + i + 1] = s * zi + c * zi1;
                        z[row * k + i] = c * zi - s * zi1;
                    }
                }
                p = -s * s2 * c3 * el1 * off[l] / dl1;
                off[l] = s * p;
                diag[l] = c * p;
                if off[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        diag[l] += shift_acc;
        off[l] = 0.0;
    }
}
