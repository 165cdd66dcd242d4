use super::{rank_check, Hessenberg, RankInfo, DEFAULT_BREAKDOWN_TOL, DEFAULT_RANK_TOL};
use crate::sparse::vector::{axpy, dot, norm2};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterOptions {
    /// `H(j+1, j) < breakdown_tol · ‖b‖₂` counts as breakdown.
    pub breakdown_tol: f64,
    pub rank_tol: f64,
}

impl Default for OuterOptions {
    fn default() -> Self {
        Self {
            breakdown_tol: DEFAULT_BREAKDOWN_TOL,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

/// An orthogonalized `A z` that has not been added to the basis yet.
#[derive(Debug, Clone)]
pub struct Candidate {
    /// `H(0..=j+1, j)`.
    pub column: Vec<f64>,
    v: Vec<f64>,
}

impl Candidate {
    pub fn subdiagonal(&self) -> f64 {
        *self.column.last().unwrap()
    }

    pub fn is_finite(&self) -> bool {
        self.column.iter().all(|x| x.is_finite())
    }
}

/// State of a flexible Arnoldi process: orthonormal basis `Q`, the
/// preconditioned directions `Z`, and the Hessenberg least-squares problem.
///
/// Each step is split into [`candidate`](Self::candidate) and
/// [`commit`](Self::commit) so a caller can inspect a direction (breakdown,
/// rank, residual reduction) before accepting it.
#[derive(Debug, Clone)]
pub struct FlexibleArnoldi {
    n: usize,
    b_norm: f64,
    beta: f64,
    x0: Vec<f64>,
    q: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    hess: Hessenberg,
    opts: OuterOptions,
    exhausted: bool,
}

impl FlexibleArnoldi {
    pub fn new(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, opts: OuterOptions) -> Self {
        let n = a.nrows();
        let x0 = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let mut r = vec![0.0; n];
        a.spmv_into(&x0, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm2(&r);
        if beta > 0.0 {
            r.iter_mut().for_each(|v| *v /= beta);
        }
        Self {
            n,
            b_norm: norm2(b),
            beta,
            x0,
            q: vec![r],
            z: Vec::new(),
            hess: Hessenberg::new(beta),
            opts,
            exhausted: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Committed outer iterations.
    pub fn iterations(&self) -> usize {
        self.hess.cols()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }

    pub fn hessenberg(&self) -> &Hessenberg {
        &self.hess
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.q
    }

    /// The vector the next inner solve must precondition, `q_{j+1}`.
    pub fn current_q(&self) -> &[f64] {
        &self.q[self.hess.cols()]
    }

    /// No further basis vector can be generated.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Least-squares residual norm `‖β e₁ - H y‖₂`.
    pub fn residual(&self) -> f64 {
        if self.hess.cols() == 0 {
            self.beta
        } else {
            self.hess.residual()
        }
    }

    /// Residual divided by `‖b‖₂` (or by 1 when `b = 0`).
    pub fn relative_residual(&self) -> f64 {
        self.residual() / self.denominator()
    }

    pub fn denominator(&self) -> f64 {
        if self.b_norm > 0.0 {
            self.b_norm
        } else {
            1.0
        }
    }

    /// `v = A z` orthogonalized against `Q` by modified Gram-Schmidt.
    pub fn candidate(&self, a: &CsrMatrix, z: &[f64]) -> Candidate {
        let j = self.hess.cols();
        let mut v = vec![0.0; self.n];
        a.spmv_into(z, &mut v);
        let mut column = vec![0.0; j + 2];
        for (i, qi) in self.q.iter().enumerate() {
            column[i] = dot(qi, &v);
            axpy(-column[i], qi, &mut v);
        }
        column[j + 1] = norm2(&v);
        Candidate { column, v }
    }

    /// Residual norm after accepting `c`.
    pub fn candidate_residual(&self, c: &Candidate) -> f64 {
        self.hess.peek_residual(&c.column)
    }

    /// `H(j+1, j)` is below tolerance, or the basis already spans the space.
    pub fn is_breakdown(&self, c: &Candidate) -> bool {
        c.subdiagonal() < self.opts.breakdown_tol * self.b_norm || self.hess.cols() + 1 >= self.n
    }

    /// Rank of the leading `j×j` block once `c` is appended.
    pub fn rank_with(&self, c: &Candidate) -> RankInfo {
        let mut h = self.hess.clone();
        h.push_column(&c.column);
        rank_check(&h, h.cols(), self.opts.rank_tol)
    }

    /// Accepts `(z, c)` as the next direction. On breakdown no new basis
    /// vector is formed and the process is marked exhausted.
    pub fn commit(&mut self, z: Vec<f64>, c: Candidate, breakdown: bool) {
        assert!(!self.exhausted, "commit after breakdown");
        self.hess.push_column(&c.column);
        self.z.push(z);
        if breakdown {
            self.exhausted = true;
        } else {
            let inv = 1.0 / c.subdiagonal();
            self.q.push(c.v.into_iter().map(|x| x * inv).collect());
        }
    }

    /// `x = x0 + Z y` for the committed columns.
    pub fn solution(&self) -> Vec<f64> {
        let mut x = self.x0.clone();
        if self.hess.cols() > 0 {
            let y = self.hess.solve();
            for (zi, yi) in self.z.iter().zip(&y) {
                axpy(*yi, zi, &mut x);
            }
        }
        x
    }
}
