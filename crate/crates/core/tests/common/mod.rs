#![allow(dead_code)]

use ftgmres_core::CsrMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn to_nalgebra(a: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.nrows(), a.ncols(), &a.to_dense())
}

/// Dense LU solve of `A x = b`.
pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
    let lu = to_nalgebra(a).lu();
    lu.solve(&DVector::from_column_slice(b))
        .expect("oracle matrix is nonsingular")
        .iter()
        .copied()
        .collect()
}

pub fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// Random nonsymmetric matrix with the given fill density and a dominant
/// diagonal, so it is well conditioned.
pub fn random_system(n: usize, density: f64, rng: &mut ChaCha8Rng) -> (CsrMatrix, Vec<f64>) {
    let mut trips = Vec::new();
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j && rng.random_bool(density) {
                let v: f64 = rng.random_range(-1.0..1.0);
                row_sum += v.abs();
                trips.push((i, j, v));
            }
        }
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        trips.push((i, i, sign * (row_sum + rng.random_range(0.5..2.0))));
    }
    let a = CsrMatrix::from_triplets(n, n, &trips).unwrap();
    let b = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (a, b)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tridiagonal(n: usize, lo: f64, diag: f64, hi: f64) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, diag));
        if i + 1 < n {
            t.push((i, i + 1, hi));
            t.push((i + 1, i, lo));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}
