use super::Hessenberg;

/// Default relative threshold: full rank iff `σ_min > rank_tol · σ_max`.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankInfo {
    pub full_rank: bool,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl RankInfo {
    pub fn from_singular_values(sv: &[f64], rank_tol: f64) -> Self {
        let sigma_max = sv.iter().copied().fold(0.0, f64::max);
        let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let sigma_min = if sv.is_empty() { 0.0 } else { sigma_min };
        Self {
            full_rank: sigma_min > rank_tol * sigma_max,
            sigma_min,
            sigma_max,
        }
    }
}

/// Singular values of a dense row-major `m×n` matrix (`m >= n`) by one-sided
/// Jacobi rotations. Unsorted.
///
/// One-sided Jacobi keeps small singular values accurate relative to the
/// matrix norm, which is what a rank decision needs.
pub fn singular_values(m: usize, n: usize, a: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), m * n, "singular_values: shape");
    assert!(m >= n, "singular_values: need m >= n");
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| a[i * n + j]).collect())
        .collect();
    let eps = f64::EPSILON;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .fold((0.0, 0.0, 0.0), |(a, b, g), (x, y)| {
                        (a + x * x, b + y * y, g + x * y)
                    });
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    cols.iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

/// Rank test of the leading `j×j` block of `h`.
pub fn rank_check(h: &Hessenberg, j: usize, rank_tol: f64) -> RankInfo {
    assert!(j >= 1 && j <= h.cols(), "rank_check: j out of range");
    let block = h.leading_block(j);
    RankInfo::from_singular_values(&singular_values(j, j, &block), rank_tol)
}
