mod common;

use common::{normal, rng, rows};
use emms_core::linalg::NormalEquations;
use emms_core::{least_squares, spectral_norm_upper_bound, Matrix};
use emms_testkit as oracle;
use rand::Rng;

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn products_match_naive_loops() {
    let mut r = rng(1);
    for _ in 0..20 {
        let (n, d, l) = (
            r.random_range(1..40),
            r.random_range(1..20),
            r.random_range(1..10),
        );
        let a = normal(&mut r, n, d);
        let b = normal(&mut r, d, l);
        let c = normal(&mut r, n, l);
        let want = oracle::matmul(&rows(&a), &rows(&b));
        assert!(max_rel_diff(a.matmul(&b).unwrap().as_slice(), &want.concat()) < 1e-13);
        let want = oracle::matmul(&oracle::transpose(&rows(&a)), &rows(&c));
        assert!(max_rel_diff(a.t_matmul(&c).unwrap().as_slice(), &want.concat()) < 1e-13);
        let want = oracle::matmul(&oracle::transpose(&rows(&a)), &rows(&a));
        assert!(max_rel_diff(a.gram().as_slice(), &want.concat()) < 1e-13);
    }
}

#[test]
fn least_squares_matches_full_pivot_elimination() {
    let mut r = rng(2);
    for _ in 0..30 {
        let d = r.random_range(1..12);
        let n = d + r.random_range(0..40);
        let l = r.random_range(1..6);
        let a = normal(&mut r, n, d);
        let b = normal(&mut r, n, l);
        let got = least_squares(&a, &b, 0.0).unwrap();
        let want = oracle::lstsq(&rows(&a), &rows(&b));
        assert!(max_rel_diff(got.as_slice(), &want.concat()) < 1e-8);
    }
}

#[test]
fn ridge_solution_satisfies_regularized_normal_equations() {
    let mut r = rng(3);
    let a = normal(&mut r, 15, 20);
    let b = normal(&mut r, 15, 2);
    let ridge = 0.3;
    let w = least_squares(&a, &b, ridge).unwrap();
    // (AᵀA + λI) w = Aᵀb, rebuilt with the oracle's products
    let mut lhs = oracle::matmul(
        &oracle::matmul(&oracle::transpose(&rows(&a)), &rows(&a)),
        &rows(&w),
    );
    for (i, row) in lhs.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v += ridge * w.get(i, j);
        }
    }
    let rhs = oracle::matmul(&oracle::transpose(&rows(&a)), &rows(&b));
    assert!(max_rel_diff(&lhs.concat(), &rhs.concat()) < 1e-10);
}

#[test]
fn normal_equations_reuse_one_factorization() {
    let mut r = rng(4);
    let a = normal(&mut r, 30, 5);
    let sys = NormalEquations::new(&a, 0.0).unwrap();
    for _ in 0..3 {
        let b = normal(&mut r, 30, 2);
        let want = oracle::lstsq(&rows(&a), &rows(&b));
        assert!(max_rel_diff(sys.solve(&a, &b).unwrap().as_slice(), &want.concat()) < 1e-9);
    }
}

#[test]
fn spectral_bound_brackets_bisection_eigenvalue() {
    let mut r = rng(5);
    for case in 0..40 {
        let (n, d) = (r.random_range(1..30), r.random_range(1..15));
        let a = match case % 4 {
            // rank one
            0 => {
                let u = normal(&mut r, n, 1);
                let v = normal(&mut r, 1, d);
                u.matmul(&v).unwrap()
            }
            // badly scaled columns
            1 => {
                let mut m = normal(&mut r, n, d);
                let scales: Vec<f64> = (0..d).map(|j| 10f64.powi(j as i32 % 5 - 2)).collect();
                m = m.matmul(&Matrix::diagonal(&scales)).unwrap();
                m
            }
            _ => normal(&mut r, n, d),
        };
        let exact = oracle::spectral_norm(&rows(&a));
        let bound = spectral_norm_upper_bound(&a);
        assert!(
            bound >= exact * (1.0 - 1e-12),
            "case {case}: {bound} < {exact}"
        );
        assert!(
            bound <= 1.01 * exact * (1.0 + 1e-12) + 1e-300,
            "case {case}: {bound} too loose vs {exact}"
        );
    }
    assert_eq!(spectral_norm_upper_bound(&Matrix::zeros(3, 4)), 0.0);
}
