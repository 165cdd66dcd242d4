/// Upper Hessenberg matrix of the Arnoldi relation together with its
/// progressively Givens-rotated QR factor and right-hand side.
///
/// Column `j` (0-based) holds `H(0..=j+1, j)`. The raw columns are kept for
/// rank checks; the rotated columns solve the least-squares problem
/// `min ‖H y - β e₁‖₂`.
#[derive(Debug, Clone)]
pub struct Hessenberg {
    raw: Vec<Vec<f64>>,
    rotated: Vec<Vec<f64>>,
    cs: Vec<f64>,
    sn: Vec<f64>,
    g: Vec<f64>,
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        (1.0, 0.0, a)
    } else {
        let r = a.hypot(b);
        (a / r, b / r, r)
    }
}

impl Hessenberg {
    pub fn new(beta: f64) -> Self {
        Self {
            raw: Vec::new(),
            rotated: Vec::new(),
            cs: Vec::new(),
            sn: Vec::new(),
            g: vec![beta],
        }
    }

    pub fn with_capacity(beta: f64, m: usize) -> Self {
        let mut h = Self::new(beta);
        h.raw.reserve(m);
        h.rotated.reserve(m);
        h.cs.reserve(m);
        h.sn.reserve(m);
        h.g.reserve(m + 1);
        h
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.raw.len()
    }

    /// `H(i, j)` (0-based), zero below the subdiagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.raw[j].get(i).copied().unwrap_or(0.0)
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.raw[j]
    }

    /// Rotates `col` by the stored rotations, returning the new rotation.
    fn rotate(&self, col: &mut [f64]) -> (f64, f64) {
        let j = self.raw.len();
        for i in 0..j {
            let (c, s) = (self.cs[i], self.sn[i]);
            let t = c * col[i] + s * col[i + 1];
            col[i + 1] = -s * col[i] + c * col[i + 1];
            col[i] = t;
        }
        let (c, s, r) = givens(col[j], col[j + 1]);
        col[j] = r;
        col[j + 1] = 0.0;
        (c, s)
    }

    /// Appends column `j = cols()`; `col` must have `j + 2` entries.
    pub fn push_column(&mut self, col: &[f64]) {
        let j = self.raw.len();
        assert_eq!(col.len(), j + 2, "hessenberg column length");
        let mut rot = col.to_vec();
        let (c, s) = self.rotate(&mut rot);
        rot.truncate(j + 1);
        let gj = self.g[j];
        self.g[j] = c * gj;
        self.g.push(-s * gj);
        self.cs.push(c);
        self.sn.push(s);
        self.rotated.push(rot);
        self.raw.push(col.to_vec());
    }

    /// Least-squares residual norm `|g[j]|` after the current columns.
    pub fn residual(&self) -> f64 {
        self.g[self.raw.len()].abs()
    }

    /// Residual norm the least-squares problem would have after appending `col`.
    pub fn peek_residual(&self, col: &[f64]) -> f64 {
        let j = self.raw.len();
        assert_eq!(col.len(), j + 2, "hessenberg column length");
        let mut rot = col.to_vec();
        let (_, s) = self.rotate(&mut rot);
        (s * self.g[j]).abs()
    }

    /// Minimizer `y` of `‖H y - β e₁‖₂` by back substitution on the rotated
    /// factor. A zero pivot contributes a zero component.
    pub fn solve(&self) -> Vec<f64> {
        let j = self.raw.len();
        let mut y = self.g[..j].to_vec();
        for i in (0..j).rev() {
            for k in i + 1..j {
                y[i] -= self.rotated[k][i] * y[k];
            }
            let d = self.rotated[i][i];
            y[i] = if d == 0.0 { 0.0 } else { y[i] / d };
        }
        y
    }

    /// Dense row-major copy of the leading `k×k` block of the raw matrix.
    pub fn leading_block(&self, k: usize) -> Vec<f64> {
        let mut d = vec![0.0; k * k];
        for j in 0..k {
            for i in 0..k.min(j + 2) {
                d[i * k + j] = self.get(i, j);
            }
        }
        d
    }

    /// Dense row-major `(j+1)×j` copy of the raw matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let j = self.raw.len();
        let mut d = vec![0.0; (j + 1) * j];
        for c in 0..j {
            for (r, &v) in self.raw[c].iter().enumerate() {
                d[r * j + c] = v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_column_least_squares() {
        // H = [3; 4], beta = 5: y = 15/25, residual = 5 * 4/5
        let mut h = Hessenberg::new(5.0);
        assert_eq!(h.peek_residual(&[3.0, 4.0]), 4.0);
        h.push_column(&[3.0, 4.0]);
        assert!((h.solve()[0] - 0.6).abs() < 1e-15);
        assert!((h.residual() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn exact_column_zero_residual() {
        let mut h = Hessenberg::new(2.0);
        h.push_column(&[4.0, 0.0]);
        assert_eq!(h.residual(), 0.0);
        assert_eq!(h.solve(), vec![0.5]);
    }

    #[test]
    fn hessenberg_shape() {
        let mut h = Hessenberg::new(1.0);
        h.push_column(&[1.0, 2.0]);
        h.push_column(&[3.0, 4.0, 5.0]);
        assert_eq!(h.get(2, 0), 0.0);
        assert_eq!(h.leading_block(2), vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(h.to_dense(), vec![1.0, 3.0, 2.0, 4.0, 0.0, 5.0]);
    }
}
