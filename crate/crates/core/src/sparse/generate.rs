use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Diagonal matrix with entries spaced logarithmically from 1 down to
/// `10^-decades`: entry `i` is `10^(-decades * i / (n - 1))`.
pub fn gen_log_diagonal(n: usize, decades: f64) -> Result<CsrMatrix> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "log diagonal needs n >= 2, got {n}"
        )));
    }
    if !(decades > 0.0 && decades.is_finite()) {
        return Err(Error::invalid(format!(
            "decades must be positive, got {decades}"
        )));
    }
    let last = (n - 1) as f64;
    let diag: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(-decades * i as f64 / last))
        .collect();
    Ok(CsrMatrix::from_diagonal(&diag))
}

/// `b = A * ones`, i.e. the right-hand side whose exact solution is all ones.
pub fn ones_rhs(a: &CsrMatrix) -> Vec<f64> {
    let mut b = vec![0.0; a.nrows()];
    a.spmv_into(&vec![1.0; a.ncols()], &mut b);
    b
}

/// Seeded uniform `[-1, 1]` right-hand side.
pub fn uniform_rhs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}
