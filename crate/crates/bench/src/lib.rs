//! Fixtures shared by the benches in `benches/`.

use ftgmres_core::CsrMatrix;

/// 2-D five-point Laplacian on a `k × k` grid, shifted to be nonsymmetric.
pub fn convection_diffusion(k: usize) -> CsrMatrix {
    let n = k * k;
    let mut t = Vec::with_capacity(5 * n);
    for i in 0..k {
        for j in 0..k {
            let r = i * k + j;
            t.push((r, r, 4.0));
            if i > 0 {
                t.push((r, r - k, -1.2));
            }
            if i + 1 < k {
                t.push((r, r + k, -0.8));
            }
            if j > 0 {
                t.push((r, r - 1, -1.1));
            }
            if j + 1 < k {
                t.push((r, r + 1, -0.9));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t).expect("valid stencil")
}
