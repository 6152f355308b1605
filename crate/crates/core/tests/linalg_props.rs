mod common;

use common::*;
use lrsdp::{Factor, SparseSym};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn triplets(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (1..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((0..n, 0..n, -10.0..10.0f64), 0..4 * n),
        )
    })
}

proptest! {
    #[test]
    fn spmv_matches_dense((n, trips) in triplets(40), seed in any::<u64>()) {
        let s = SparseSym::from_triplets(n, trips.clone()).unwrap();
        // reference built straight from the triplets: (i, j) and (j, i) both land on the pair
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for &(i, j, v) in &trips {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            dense[(a, b)] += v;
            if a != b {
                dense[(b, a)] += v;
            }
        }
        let x = random_vec(&mut rng(seed), n);
        let want = &dense * DVector::from_column_slice(&x);
        let got = s.spmv(&x).unwrap();
        for i in 0..n {
            prop_assert!((got[i] - want[i]).abs() <= 1e-12 * (1.0 + want[i].abs()));
        }
        prop_assert!((s.fro_norm() - dense.norm()).abs() <= 1e-12 * (1.0 + dense.norm()));
    }

    #[test]
    fn spmv_is_self_adjoint((n, trips) in triplets(30), seed in any::<u64>()) {
        let s = SparseSym::from_triplets(n, trips).unwrap();
        let mut r = rng(seed);
        let x = random_vec(&mut r, n);
        let y = random_vec(&mut r, n);
        let sx = s.spmv(&x).unwrap();
        let sy = s.spmv(&y).unwrap();
        let lhs: f64 = y.iter().zip(&sx).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&sy).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn gram_inner_equals_column_quadratic_forms(
        (n, trips) in triplets(30),
        r in 1usize..6,
        seed in any::<u64>(),
    ) {
        let s = SparseSym::from_triplets(n, trips).unwrap();
        let y = random_factor(&mut rng(seed), n, r);
        let by_columns: f64 = y
            .columns()
            .map(|c| {
                let sc = s.spmv(c).unwrap();
                c.iter().zip(&sc).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum();
        let got = s.gram_inner(&y).unwrap();
        prop_assert!((got - by_columns).abs() <= 1e-12 * (1.0 + by_columns.abs()));
        let dense = inner(&dense_sym(&s), &gram(&y));
        prop_assert!((got - dense).abs() <= 1e-10 * (1.0 + dense.abs()));
    }

    #[test]
    fn factor_products_match_dense(n in 1usize..20, r in 1usize..6, seed in any::<u64>()) {
        let mut rn = rng(seed);
        let y = random_factor(&mut rn, n, r);
        let g = random_vec(&mut rn, r);
        let v = random_vec(&mut rn, n);
        let d = dense_factor(&y);
        let yg = &d * DVector::from_column_slice(&g);
        let ytv = d.transpose() * DVector::from_column_slice(&v);
        for (a, b) in y.mul_vec(&g).iter().zip(yg.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        for (a, b) in y.transpose_mul(&v).iter().zip(ytv.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        prop_assert!((y.fro_norm_sq() - d.norm_squared()).abs() <= 1e-12 * (1.0 + d.norm_squared()));
    }
}

#[test]
fn frobenius_norm_squared_is_sum_of_squared_eigenvalues() {
    let mut r = rng(11);
    for n in [1, 5, 17, 40] {
        let s = random_sparse(&mut r, n, 0.3);
        let eig = dense_sym(&s).symmetric_eigen().eigenvalues;
        let want = eig.iter().map(|l| l * l).sum::<f64>();
        assert!((s.fro_norm().powi(2) - want).abs() <= 1e-10 * (1.0 + want));
    }
}

#[test]
fn spmv_on_two_hundred_dimensional_instance() {
    let mut r = rng(5);
    let s = random_sparse(&mut r, 200, 0.05);
    let x = random_vec(&mut r, 200);
    let want = dense_sym(&s) * DVector::from_column_slice(&x);
    let got = s.spmv(&x).unwrap();
    for i in 0..200 {
        assert!((got[i] - want[i]).abs() <= 1e-12 * (1.0 + want[i].abs()));
    }
}

#[test]
fn append_columns_keeps_existing_block() {
    let mut y = Factor::from_fn(4, 2, |i, k| (i * 2 + k) as f64);
    let before = y.clone();
    y.append_columns(&Factor::from_fn(4, 3, |_, _| 1.0)).unwrap();
    assert_eq!(y.rank(), 5);
    for i in 0..4 {
        for k in 0..2 {
            assert_eq!(y.get(i, k), before.get(i, k));
        }
    }
    assert!(y.append_columns(&Factor::zeros(3, 1)).is_err());
}
