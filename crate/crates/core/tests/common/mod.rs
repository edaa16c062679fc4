#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sysid::model::make_nonuniform_schedule;

/// Chebyshev design matrix on the node span, solved by dense SVD least squares.
pub fn oracle_fit(times: &[f64], values: &[f64], order: usize, eval_at: &[f64]) -> (Vec<f64>, f64) {
    let lo = times[0];
    let hi = *times.last().unwrap();
    let map = |t: f64| (2.0 * t - lo - hi) / (hi - lo);
    let cheb = |u: f64, n: usize| -> Vec<f64> {
        let mut v = vec![1.0; n];
        if n > 1 {
            v[1] = u;
        }
        for j in 2..n {
            v[j] = 2.0 * u * v[j - 1] - v[j - 2];
        }
        v
    };
    let a = DMatrix::from_fn(times.len(), order, |i, j| cheb(map(times[i]), order)[j]);
    let b = DVector::from_column_slice(values);
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
    let resid = (&a * &coef - &b).norm_squared();
    let out = eval_at
        .iter()
        .map(|&t| {
            cheb(map(t), order)
                .iter()
                .zip(coef.iter())
                .map(|(p, c)| p * c)
                .sum()
        })
        .collect();
    (out, resid)
}

pub fn random_case(seed: u64) -> (Vec<f64>, Vec<f64>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(10..=60);
    let times = make_nonuniform_schedule(seed, k, 1.1, 0.1).unwrap();
    let values: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
    let n = rng.random_range(1..=25.min(k));
    (times, values, n)
}

/// Max absolute row sum of `H`: how much the transform can amplify data.
pub fn lebesgue_constant(h: &DMatrix<f64>) -> f64 {
    (0..h.nrows())
        .map(|i| h.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
