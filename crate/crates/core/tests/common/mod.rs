#![allow(dead_code)]

use emms_core::{stack_flabels, FLabelStack, FeatureMatrix, Matrix};
use emms_testkit::Rows;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    let data = (0..r * c)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix::new(r, c, data).unwrap()
}

pub fn rows(m: &Matrix) -> Rows {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Random features and independent Gaussian label slices.
pub struct Instance {
    pub x: FeatureMatrix,
    pub z: FLabelStack,
    pub x_rows: Rows,
    pub z_rows: Vec<Rows>,
}

pub fn instance(rng: &mut ChaCha8Rng, n: usize, d: usize, l: usize, k: usize) -> Instance {
    let x = normal(rng, n, d);
    // Labels share a component explained by X so the fit is non-trivial.
    let w = normal(rng, d, l).scale(1.0 / (d as f64).sqrt());
    let base = x.matmul(&w).unwrap();
    let slices: Vec<Matrix> = (0..k)
        .map(|_| {
            let level = rng.random_range(0.1..2.0);
            base.add(&normal(rng, n, l).scale(level)).unwrap()
        })
        .collect();
    let z_rows = slices.iter().map(rows).collect();
    Instance {
        x_rows: rows(&x),
        x: FeatureMatrix::new(x),
        z: stack_flabels(slices).unwrap(),
        z_rows,
    }
}

pub fn random_dims(
    rng: &mut ChaCha8Rng,
    n: (usize, usize),
    d: (usize, usize),
    l: (usize, usize),
    k: (usize, usize),
) -> (usize, usize, usize, usize) {
    (
        rng.random_range(n.0..=n.1),
        rng.random_range(d.0..=d.1),
        rng.random_range(l.0..=l.1),
        rng.random_range(k.0..=k.1),
    )
}
