//! Dense vector kernels.
//!
//! Length mismatches are caller bugs and panic.

/// Dense vectors are plain `Vec<f64>`; kernels take slices.
pub type DenseVector = Vec<f64>;

#[inline]
fn check_len(op: &str, x: &[f64], y: &[f64]) {
    assert_eq!(x.len(), y.len(), "{op}: length mismatch");
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    check_len("dot", x, y);
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y <- alpha * x + y`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    check_len("axpy", x, y);
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Bitwise equality, distinguishing signed zeros and NaN payloads.
pub fn bitwise_eq(x: &[f64], y: &[f64]) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a.to_bits() == b.to_bits())
}
