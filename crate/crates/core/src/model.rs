//! Canonical trace-bounded SDP:
//!
//! ```text
//! minimize <C, X>  subject to  <A_i, X> = b_i,  X PSD,  Tr(X) <= alpha
//! ```
//!
//! with `X = Y Y^T` supplied as a [`Factor`]. Constraint matrices use
//! specialized kinds so that `A(Y Y^T)` and `A*(lambda) x` cost
//! `O(n r + nnz)` instead of densifying each `A_i`.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dot, Factor, SparseSym};

/// Structure of a single constraint matrix `A_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    /// `e_i e_i^T`, so `<A, X> = X_ii`.
    Diag(usize),
    /// `(e_i e_j^T + e_j e_i^T) / 2` with `i != j`, so `<A, X> = X_ij`.
    UnitOffDiag(usize, usize),
    /// `d d^T` for a dense vector `d`.
    RankOne(Vec<f64>),
    /// Identity, so `<A, X> = Tr(X)`.
    Trace,
    General(SparseSym),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub rhs: f64,
}

impl Constraint {
    pub fn diag(i: usize, rhs: f64) -> Self {
        Self {
            kind: ConstraintKind::Diag(i),
            rhs,
        }
    }

    pub fn unit_off_diag(i: usize, j: usize, rhs: f64) -> Self {
        Self {
            kind: ConstraintKind::UnitOffDiag(i, j),
            rhs,
        }
    }

    pub fn rank_one(d: Vec<f64>, rhs: f64) -> Self {
        Self {
            kind: ConstraintKind::RankOne(d),
            rhs,
        }
    }

    pub fn trace(rhs: f64) -> Self {
        Self {
            kind: ConstraintKind::Trace,
            rhs,
        }
    }

    pub fn general(s: SparseSym, rhs: f64) -> Self {
        Self {
            kind: ConstraintKind::General(s),
            rhs,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match &self.kind {
            ConstraintKind::Diag(i) if *i >= n => Err(Error::IndexOutOfRange { row: *i, col: *i, n }),
            ConstraintKind::UnitOffDiag(i, j) if *i >= n || *j >= n => {
                Err(Error::IndexOutOfRange { row: *i, col: *j, n })
            }
            ConstraintKind::UnitOffDiag(i, j) if i == j => Err(Error::InvalidInput(format!(
                "off-diagonal constraint on diagonal position ({i}, {j})"
            ))),
            ConstraintKind::RankOne(d) => check_dim("rank-one constraint", n, d.len()),
            ConstraintKind::General(s) => check_dim("general constraint", n, s.dim()),
            _ => Ok(()),
        }
    }

    /// `<A, Y Y^T>`.
    pub fn evaluate(&self, y: &Factor) -> f64 {
        self.bilinear(y, y)
    }

    /// `<A, Y D^T>`.
    pub(crate) fn bilinear(&self, y: &Factor, d: &Factor) -> f64 {
        match &self.kind {
            ConstraintKind::Diag(i) => Factor::cross_row_dot(y, *i, d, *i),
            ConstraintKind::UnitOffDiag(i, j) => {
                0.5 * (Factor::cross_row_dot(y, *i, d, *j) + Factor::cross_row_dot(y, *j, d, *i))
            }
            ConstraintKind::RankOne(v) => dot(&y.transpose_mul(v), &d.transpose_mul(v)),
            ConstraintKind::Trace => dot(y.data(), d.data()),
            ConstraintKind::General(s) => s.bilinear(y, d),
        }
    }

    /// `out += scale * A x`.
    pub(crate) fn matvec_acc(&self, scale: f64, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            ConstraintKind::Diag(i) => out[*i] += scale * x[*i],
            ConstraintKind::UnitOffDiag(i, j) => {
                out[*i] += 0.5 * scale * x[*j];
                out[*j] += 0.5 * scale * x[*i];
            }
            ConstraintKind::RankOne(v) => axpy(scale * dot(v, x), v, out),
            ConstraintKind::Trace => axpy(scale, x, out),
            ConstraintKind::General(s) => s.spmv_acc(scale, x, out),
        }
    }

    /// Explicit matrix of this constraint.
    pub fn to_sparse(&self, n: usize) -> Result<SparseSym> {
        self.validate(n)?;
        match &self.kind {
            ConstraintKind::Diag(i) => SparseSym::from_triplets(n, [(*i, *i, 1.0)]),
            ConstraintKind::UnitOffDiag(i, j) => SparseSym::from_triplets(n, [(*i, *j, 0.5)]),
            ConstraintKind::RankOne(v) => rank_one_sparse(1.0, v),
            ConstraintKind::Trace => Ok(SparseSym::identity(n)),
            ConstraintKind::General(s) => Ok(s.clone()),
        }
    }
}

fn rank_one_sparse(weight: f64, v: &[f64]) -> Result<SparseSym> {
    let n = v.len();
    let mut t = Vec::new();
    for i in 0..n {
        for j in i..n {
            let val = weight * v[i] * v[j];
            if val != 0.0 {
                t.push((i, j, val));
            }
        }
    }
    SparseSym::from_triplets(n, t)
}

/// Cost matrix `C`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cost {
    Sparse(SparseSym),
    /// `weight * v v^T`, kept implicit so a dense all-ones cost needs `O(n)` storage.
    RankOne {
        weight: f64,
        vector: Vec<f64>,
    },
}

impl Cost {
    pub fn dim(&self) -> usize {
        match self {
            Cost::Sparse(s) => s.dim(),
            Cost::RankOne { vector, .. } => vector.len(),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        match self {
            Cost::Sparse(s) => s.fro_norm(),
            Cost::RankOne { weight, vector } => weight.abs() * dot(vector, vector),
        }
    }

    pub(crate) fn bilinear(&self, y: &Factor, d: &Factor) -> f64 {
        match self {
            Cost::Sparse(s) => s.bilinear(y, d),
            Cost::RankOne { weight, vector } => {
                weight * dot(&y.transpose_mul(vector), &d.transpose_mul(vector))
            }
        }
    }

    pub(crate) fn matvec_acc(&self, scale: f64, x: &[f64], out: &mut [f64]) {
        match self {
            Cost::Sparse(s) => s.spmv_acc(scale, x, out),
            Cost::RankOne { weight, vector } => axpy(scale * weight * dot(vector, x), vector, out),
        }
    }

    pub fn to_sparse(&self) -> Result<SparseSym> {
        match self {
            Cost::Sparse(s) => Ok(s.clone()),
            Cost::RankOne { weight, vector } => rank_one_sparse(*weight, vector),
        }
    }

    fn negated(self) -> Self {
        match self {
            Cost::Sparse(s) => {
                let n = s.dim();
                let flipped = s.entries().iter().map(|&(i, j, v)| (i, j, -v));
                Cost::Sparse(SparseSym::from_triplets(n, flipped).expect("same pattern"))
            }
            Cost::RankOne { weight, vector } => Cost::RankOne {
                weight: -weight,
                vector,
            },
        }
    }
}

/// Trace-bounded SDP in canonical minimization form.
#[derive(Debug, Clone)]
pub struct Problem {
    n: usize,
    cost: Cost,
    constraints: Vec<Constraint>,
    b: Vec<f64>,
    trace_bound: f64,
    /// The user problem was a maximization; `cost` has been negated.
    sense_flip: bool,
    cost_fro: f64,
}

impl Problem {
    /// Minimization problem `min <C, X>`.
    pub fn minimize(cost: Cost, constraints: Vec<Constraint>, trace_bound: f64) -> Result<Self> {
        Self::build(cost, constraints, trace_bound, false)
    }

    /// Maximization problem `max <C, X>`, stored as `min <-C, X>`.
    pub fn maximize(cost: Cost, constraints: Vec<Constraint>, trace_bound: f64) -> Result<Self> {
        Self::build(cost.negated(), constraints, trace_bound, true)
    }

    fn build(cost: Cost, constraints: Vec<Constraint>, trace_bound: f64, sense_flip: bool) -> Result<Self> {
        let n = cost.dim();
        if !(trace_bound > 0.0 && trace_bound.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "trace bound must be positive and finite, got {trace_bound}"
            )));
        }
        for c in &constraints {
            c.validate(n)?;
            if !c.rhs.is_finite() {
                return Err(Error::InvalidInput("non-finite right-hand side".into()));
            }
        }
        let b = constraints.iter().map(|c| c.rhs).collect();
        let cost_fro = cost.fro_norm();
        Ok(Self {
            n,
            cost,
            constraints,
            b,
            trace_bound,
            sense_flip,
            cost_fro,
        })
    }

    /// Replaces the trace bound `alpha`.
    pub fn with_trace_bound(mut self, trace_bound: f64) -> Result<Self> {
        if !(trace_bound > 0.0 && trace_bound.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "trace bound must be positive and finite, got {trace_bound}"
            )));
        }
        self.trace_bound = trace_bound;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn cost(&self) -> &Cost {
        &self.cost
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn trace_bound(&self) -> f64 {
        self.trace_bound
    }

    pub fn sense_flip(&self) -> bool {
        self.sense_flip
    }

    /// `||C||_F` of the canonical cost.
    pub fn cost_fro_norm(&self) -> f64 {
        self.cost_fro
    }

    /// Largest rank the solver will use: `floor(sqrt(2m) + 1)`.
    pub fn rank_cap(&self) -> usize {
        ((2.0 * self.num_constraints() as f64).sqrt() + 1.0).floor() as usize
    }

    /// Converts a canonical (minimization) value to the user's sense.
    pub fn user_value(&self, canonical: f64) -> f64 {
        if self.sense_flip {
            -canonical
        } else {
            canonical
        }
    }

    /// Canonical objective `<C, Y Y^T>`.
    pub fn objective(&self, y: &Factor) -> Result<f64> {
        check_dim("objective", self.n, y.rows())?;
        Ok(self.cost.bilinear(y, y))
    }

    /// `A(Y Y^T)`.
    pub fn apply_a(&self, y: &Factor) -> Result<Vec<f64>> {
        check_dim("apply_a", self.n, y.rows())?;
        Ok(self.constraints.iter().map(|c| c.evaluate(y)).collect())
    }

    /// `A(Y D^T)` and `<C, Y D^T>`, the cross terms of a line search.
    pub(crate) fn bilinear_terms(&self, y: &Factor, d: &Factor) -> (f64, Vec<f64>) {
        let cost = self.cost.bilinear(y, d);
        let a = self.constraints.iter().map(|c| c.bilinear(y, d)).collect();
        (cost, a)
    }

    /// `A*(lambda) x = sum_i lambda_i A_i x`.
    pub fn adjoint_matvec(&self, lambda: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_dim("adjoint_matvec (lambda)", self.num_constraints(), lambda.len())?;
        check_dim("adjoint_matvec (x)", self.n, x.len())?;
        let mut out = vec![0.0; self.n];
        for (c, &l) in self.constraints.iter().zip(lambda) {
            if l != 0.0 {
                c.matvec_acc(l, x, &mut out);
            }
        }
        Ok(out)
    }

    /// `(C - A*(lambda)) x`, never materializing the matrix.
    pub fn astar_matvec(&self, lambda: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_dim("astar_matvec (lambda)", self.num_constraints(), lambda.len())?;
        check_dim("astar_matvec (x)", self.n, x.len())?;
        let mut out = vec![0.0; self.n];
        self.astar_matvec_into(lambda, x, &mut out);
        Ok(out)
    }

    /// Unchecked variant of [`Problem::astar_matvec`]; overwrites `out`.
    pub(crate) fn astar_matvec_into(&self, lambda: &[f64], x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.cost.matvec_acc(1.0, x, out);
        for (c, &l) in self.constraints.iter().zip(lambda) {
            if l != 0.0 {
                c.matvec_acc(-l, x, out);
            }
        }
    }

    /// `|<A*(lambda), Y Y^T> - lambda^T A(Y Y^T)| / (1 + |lambda^T A(Y Y^T)|)`.
    ///
    /// The left term goes through the matvec path, the right through the
    /// constraint evaluation kernels, so this compares the two.
    pub fn adjoint_check(&self, lambda: &[f64], y: &Factor) -> Result<f64> {
        let via_a = dot(lambda, &self.apply_a(y)?);
        let mut via_adjoint = 0.0;
        for col in y.columns() {
            via_adjoint += dot(col, &self.adjoint_matvec(lambda, col)?);
        }
        Ok((via_adjoint - via_a).abs() / (1.0 + via_a.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k3_maxcut() -> Problem {
        let l = SparseSym::from_triplets(
            3,
            [
                (0, 0, 0.5),
                (1, 1, 0.5),
                (2, 2, 0.5),
                (0, 1, -0.25),
                (1, 2, -0.25),
                (0, 2, -0.25),
            ],
        )
        .unwrap();
        let cons = (0..3).map(|i| Constraint::diag(i, 1.0)).collect();
        Problem::maximize(Cost::Sparse(l), cons, 3.0).unwrap()
    }

    #[test]
    fn apply_a_on_identity_factor() {
        let p = k3_maxcut();
        let y = Factor::from_fn(3, 3, |i, k| if i == k { 1.0 } else { 0.0 });
        assert_eq!(p.apply_a(&y).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn theta_k2_constraint_values() {
        let cons = vec![Constraint::trace(1.0), Constraint::unit_off_diag(0, 1, 0.0)];
        let cost = Cost::RankOne {
            weight: 1.0,
            vector: vec![1.0, 1.0],
        };
        let p = Problem::maximize(cost, cons, 1.0).unwrap();
        let h = 0.5f64.sqrt();
        let y = Factor::from_col_major(2, 1, vec![h, h]).unwrap();
        let a = p.apply_a(&y).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-15);
        assert!((a[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn astar_with_zero_lambda_is_cost_matvec() {
        let p = k3_maxcut();
        let x = [1.0, -2.0, 0.5];
        let got = p.astar_matvec(&[0.0; 3], &x).unwrap();
        let expect = p.cost().to_sparse().unwrap().spmv(&x).unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn astar_with_unit_lambda_subtracts_identity() {
        let p = k3_maxcut();
        let e1 = [1.0, 0.0, 0.0];
        let got = p.astar_matvec(&[1.0; 3], &e1).unwrap();
        let mut expect = p.cost().to_sparse().unwrap().spmv(&e1).unwrap();
        expect[0] -= 1.0;
        assert_eq!(got, expect);
    }

    #[test]
    fn adjoint_check_zero_lambda_is_zero() {
        let p = k3_maxcut();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = Factor::gaussian(3, 2, 1.0, &mut rng);
        assert_eq!(p.adjoint_check(&[0.0; 3], &y).unwrap(), 0.0);
    }

    #[test]
    fn adjoint_check_random_k3() {
        let p = k3_maxcut();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let y = Factor::gaussian(3, 3, 1.0, &mut rng);
            let lambda: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            assert!(p.adjoint_check(&lambda, &y).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn validation_errors() {
        let cost = Cost::Sparse(SparseSym::identity(3));
        assert!(Problem::minimize(cost.clone(), vec![Constraint::diag(3, 1.0)], 1.0).is_err());
        assert!(Problem::minimize(cost.clone(), vec![Constraint::unit_off_diag(1, 1, 0.0)], 1.0).is_err());
        assert!(Problem::minimize(cost.clone(), vec![Constraint::rank_one(vec![1.0; 2], 0.0)], 1.0).is_err());
        assert!(Problem::minimize(cost.clone(), vec![], 0.0).is_err());
        assert!(Problem::minimize(cost, vec![], -1.0).is_err());
    }

    #[test]
    fn rank_cap_formula() {
        let p = k3_maxcut();
        assert_eq!(p.rank_cap(), 3); // floor(sqrt(6) + 1)
        let empty = Problem::minimize(Cost::Sparse(SparseSym::identity(2)), vec![], 1.0).unwrap();
        assert_eq!(empty.rank_cap(), 1);
    }

    #[test]
    fn maximize_negates_cost_and_reports_user_sense() {
        let p = k3_maxcut();
        assert!(p.sense_flip());
        assert_eq!(p.user_value(-2.25), 2.25);
        let y = Factor::from_fn(3, 3, |i, k| if i == k { 1.0 } else { 0.0 });
        // <-L/4, I> = -(0.5 * 3)
        assert!((p.objective(&y).unwrap() + 1.5).abs() < 1e-15);
    }
}
