use crate::fault::repair_neighbor_average;
use crate::sparse::vector::{max_abs, scale};

/// Directions with entries beyond this magnitude are rescaled to unit
/// max-norm before use, so the outer matrix-vector product cannot overflow.
pub const RESCALE_THRESHOLD: f64 = 1e150;

/// Replaces every NaN/±Inf entry by the mean of its finite neighbors in the
/// original vector. Returns the number of repaired entries; a finite vector
/// is left bitwise untouched.
pub fn scrub_vector(v: &mut [f64], window: usize) -> usize {
    if v.iter().all(|x| x.is_finite()) {
        return 0;
    }
    let original = v.to_vec();
    let mut repaired = 0;
    for (i, x) in v.iter_mut().enumerate() {
        if !x.is_finite() {
            *x = repair_neighbor_average(&original, i, window);
            repaired += 1;
        }
    }
    repaired
}

/// Makes an inner-solve result safe for the reliable outer iteration:
/// scrub, then rescale if its magnitude is dangerous. Flexible GMRES is
/// invariant to the scaling of a direction.
pub fn prepare_direction(z: &mut [f64], window: usize) -> usize {
    let repaired = scrub_vector(z, window);
    let m = max_abs(z);
    if m > RESCALE_THRESHOLD {
        scale(1.0 / m, z);
    }
    repaired
}
