use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::Recovery;
use crate::krylov::{singular_values, Hessenberg};
use crate::sparse::vector::{axpy, dot, norm2};
use crate::sparse::CsrMatrix;

const PROBE_STEPS: usize = 10;

/// What the outer iteration does after a rank-deficient step.
#[derive(Debug, Clone, PartialEq)]
pub enum RecoveryAction {
    /// Run the inner solve for this iteration again.
    Retry,
    /// Use this direction instead.
    Replace(Vec<f64>),
    /// Stop with the previous iterate.
    ReturnLastGood,
}

/// Chooses the response to the `attempt`-th (1-based) rank deficiency in an
/// outer iteration. Strategies degrade to [`RecoveryAction::ReturnLastGood`]
/// once `attempt` exceeds `max_retries`.
pub fn recover(
    strategy: Recovery,
    attempt: usize,
    max_retries: usize,
    n: usize,
    inverse_norm: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> RecoveryAction {
    if attempt > max_retries {
        return RecoveryAction::ReturnLastGood;
    }
    match strategy {
        Recovery::RetryInner => RecoveryAction::Retry,
        Recovery::RandomZ => {
            RecoveryAction::Replace(random_direction(rng, n, inverse_norm.unwrap_or(1.0)))
        }
        Recovery::ReturnLastGood => RecoveryAction::ReturnLastGood,
    }
}

/// Uniform random vector in `[-1, 1]ⁿ`, normalized and multiplied by `scale`.
pub fn random_direction(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let nrm = norm2(&v);
        if nrm > 0.0 {
            return v.into_iter().map(|x| x * scale / nrm).collect();
        }
    }
}

/// Estimates `‖A⁻¹‖₂` as `1/σ_min` of the Hessenberg matrix from a short
/// Arnoldi probe started at the normalized ones vector. The estimate never
/// exceeds the true value. `None` if the probe yields no usable bound.
pub fn estimate_inverse_norm(a: &CsrMatrix) -> Option<f64> {
    let n = a.nrows();
    if n == 0 {
        return None;
    }
    let steps = PROBE_STEPS.min(n);
    let mut q = vec![vec![1.0 / (n as f64).sqrt(); n]];
    let mut hess = Hessenberg::new(1.0);
    let mut v = vec![0.0; n];
    let mut square = false;
    for j in 0..steps {
        a.spmv_into(&q[j], &mut v);
        let mut col = vec![0.0; j + 2];
        for (i, qi) in q.iter().enumerate() {
            col[i] = dot(qi, &v);
            axpy(-col[i], qi, &mut v);
        }
        col[j + 1] = norm2(&v);
        hess.push_column(&col);
        if col[j + 1] <= 1e-14 * a.max_abs() {
            square = true;
            break;
        }
        let inv = 1.0 / col[j + 1];
        q.push(v.iter().map(|x| x * inv).collect());
    }
    let k = hess.cols();
    let sv = if square {
        singular_values(k, k, &hess.leading_block(k))
    } else {
        singular_values(k + 1, k, &hess.to_dense())
    };
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (smin > 0.0 && smin.is_finite()).then(|| 1.0 / smin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn degrade_after_retries() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            recover(Recovery::RetryInner, 1, 2, 3, None, &mut rng),
            RecoveryAction::Retry
        );
        assert_eq!(
            recover(Recovery::RetryInner, 3, 2, 3, None, &mut rng),
            RecoveryAction::ReturnLastGood
        );
        assert_eq!(
            recover(Recovery::ReturnLastGood, 1, 2, 3, None, &mut rng),
            RecoveryAction::ReturnLastGood
        );
    }

    #[test]
    fn random_direction_has_requested_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = random_direction(&mut rng, 17, 3.5);
        assert!((norm2(&v) - 3.5).abs() < 1e-13);
    }

    #[test]
    fn inverse_norm_of_small_diagonal_is_exact() {
        // the probe spans the whole space, so the estimate is 1/min|d|
        let a = CsrMatrix::from_diagonal(&[4.0, 0.5, 2.0, 8.0]);
        let est = estimate_inverse_norm(&a).unwrap();
        assert!((est - 2.0).abs() < 1e-10, "{est}");
    }

    #[test]
    fn inverse_norm_is_a_lower_bound() {
        let d: Vec<f64> = (0..200).map(|i| 10f64.powf(-(i as f64) / 40.0)).collect();
        let a = CsrMatrix::from_diagonal(&d);
        let est = estimate_inverse_norm(&a).unwrap();
        let truth = 1.0 / d.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(
            est > 1.0 && est <= truth * (1.0 + 1e-12),
            "{est} vs {truth}"
        );
    }
}
