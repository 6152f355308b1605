//! Random hyperplane rounding of low-rank factors to discrete solutions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Factor, RectMatrix, SparseSym};

#[derive(Debug, Clone, PartialEq)]
pub struct CutSolution {
    pub side: Vec<bool>,
    pub value: f64,
    pub trials_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutNormSolution {
    pub value: f64,
    /// Row subset `S`.
    pub rows: Vec<bool>,
    /// Column subset `T`.
    pub cols: Vec<bool>,
    pub trials_used: usize,
}

/// Weight of Laplacian edges crossing `side`: `sum_{p<q, split} -L_pq`.
pub fn laplacian_cut(l: &SparseSym, side: &[bool]) -> f64 {
    l.entries()
        .iter()
        .filter(|&&(p, q, _)| p != q && side[p] != side[q])
        .map(|&(_, _, v)| -v)
        .sum()
}

/// `|sum_{i in S, j in T} A_ij|`.
pub fn cut_norm_value(a: &RectMatrix, rows: &[bool], cols: &[bool]) -> f64 {
    let mut s = 0.0;
    for (i, _) in rows.iter().enumerate().filter(|(_, &r)| r) {
        for (j, _) in cols.iter().enumerate().filter(|(_, &c)| c) {
            s += a.get(i, j);
        }
    }
    s.abs()
}

/// Yields `sign(Y g)` for a fresh Gaussian `g` per trial; `sign(0) = +`.
struct Hyperplanes<'a> {
    y: &'a Factor,
    rng: ChaCha8Rng,
    g: Vec<f64>,
}

impl<'a> Hyperplanes<'a> {
    fn new(y: &'a Factor, seed: u64) -> Self {
        Self {
            y,
            rng: ChaCha8Rng::seed_from_u64(seed),
            g: vec![0.0; y.rank()],
        }
    }

    fn next_sides(&mut self) -> Vec<bool> {
        for gk in self.g.iter_mut() {
            *gk = StandardNormal.sample(&mut self.rng);
        }
        self.y.mul_vec(&self.g).into_iter().map(|v| v >= 0.0).collect()
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidInput("rounding needs at least one trial".into()));
    }
    Ok(())
}

/// Best cut over `trials` random hyperplanes.
pub fn round_maxcut(y: &Factor, laplacian: &SparseSym, trials: usize, seed: u64) -> Result<CutSolution> {
    check_trials(trials)?;
    check_dim("round_maxcut", laplacian.dim(), y.rows())?;
    let mut planes = Hyperplanes::new(y, seed);
    let mut best = CutSolution {
        side: Vec::new(),
        value: f64::NEG_INFINITY,
        trials_used: trials,
    };
    for _ in 0..trials {
        let side = planes.next_sides();
        let value = laplacian_cut(laplacian, &side);
        if value > best.value {
            best.value = value;
            best.side = side;
        }
    }
    Ok(best)
}

/// Moves vertices off the larger side, cheapest cut increase first,
/// until both sides have `n / 2` vertices.
fn balance(laplacian: &SparseSym, side: &mut [bool]) {
    let n = side.len();
    // same[v] / other[v]: edge weight from v to its own / the opposite side
    let mut same = vec![0.0; n];
    let mut other = vec![0.0; n];
    for v in 0..n {
        for (u, l) in laplacian.row(v) {
            if u == v {
                continue;
            }
            if side[u] == side[v] {
                same[v] -= l;
            } else {
                other[v] -= l;
            }
        }
    }
    let mut count_true = side.iter().filter(|&&s| s).count();
    while count_true != n / 2 {
        let from = count_true > n / 2;
        let v = (0..n)
            .filter(|&v| side[v] == from)
            .min_by(|&a, &b| (same[a] - other[a]).total_cmp(&(same[b] - other[b])))
            .expect("larger side is non-empty");
        for (u, l) in laplacian.row(v) {
            if u == v {
                continue;
            }
            let w = -l;
            if side[u] == side[v] {
                same[u] -= w;
                other[u] += w;
            } else {
                other[u] -= w;
                same[u] += w;
            }
        }
        std::mem::swap(&mut same[v], &mut other[v]);
        side[v] = !from;
        if from {
            count_true -= 1;
        } else {
            count_true += 1;
        }
    }
}

/// Smallest balanced cut over `trials` hyperplanes, each repaired to an
/// exact bisection.
pub fn round_bisection(y: &Factor, laplacian: &SparseSym, trials: usize, seed: u64) -> Result<CutSolution> {
    check_trials(trials)?;
    check_dim("round_bisection", laplacian.dim(), y.rows())?;
    if !y.rows().is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "bisection needs an even vertex count, got {}",
            y.rows()
        )));
    }
    let mut planes = Hyperplanes::new(y, seed);
    let mut best = CutSolution {
        side: Vec::new(),
        value: f64::INFINITY,
        trials_used: trials,
    };
    for _ in 0..trials {
        let mut side = planes.next_sides();
        balance(laplacian, &mut side);
        let value = laplacian_cut(laplacian, &side);
        if value < best.value {
            best.value = value;
            best.side = side;
        }
    }
    Ok(best)
}

/// Cut-norm rounding: one shared hyperplane signs both row and column
/// blocks, then the best of the four sign restrictions gives `(S, T)`.
pub fn round_cutnorm(y: &Factor, a: &RectMatrix, trials: usize, seed: u64) -> Result<CutNormSolution> {
    check_trials(trials)?;
    let (m, n) = (a.rows(), a.cols());
    check_dim("round_cutnorm", m + n, y.rows())?;
    let mut planes = Hyperplanes::new(y, seed);
    let mut best = CutNormSolution {
        value: f64::NEG_INFINITY,
        rows: Vec::new(),
        cols: Vec::new(),
        trials_used: trials,
    };
    for _ in 0..trials {
        let signs = planes.next_sides();
        let (xs, ys) = signs.split_at(m);
        for row_sign in [true, false] {
            let rows: Vec<bool> = xs.iter().map(|&s| s == row_sign).collect();
            for col_sign in [true, false] {
                let cols: Vec<bool> = ys.iter().map(|&s| s == col_sign).collect();
                let value = cut_norm_value(a, &rows, &cols);
                if value > best.value {
                    best.value = value;
                    best.rows = rows.clone();
                    best.cols = cols;
                }
            }
        }
    }
    Ok(best)
}
