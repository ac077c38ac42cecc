#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ridge_ssvs::distributions::{standard_normal, RngStream};
use ridge_ssvs::model::Dataset;

pub fn names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("V{j}")).collect()
}

pub fn gaussian_design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = RngStream::new(seed, 99);
    DMatrix::from_fn(n, p, |_, _| standard_normal(&mut rng))
}

/// Probit data `Y = 1{Xβ + ε > 0}` with a single random-effect level.
pub fn probit_dataset(x: DMatrix<f64>, beta: &[f64], seed: u64) -> Dataset {
    let mut rng = RngStream::new(seed, 98);
    let n = x.nrows();
    let eta = &x * DVector::from_column_slice(beta);
    let y = (0..n)
        .map(|i| eta[i] + standard_normal(&mut rng) > 0.0)
        .collect();
    let p = x.ncols();
    Dataset::with_levels(x, &vec![0; n], 1, y, names(p)).unwrap()
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
