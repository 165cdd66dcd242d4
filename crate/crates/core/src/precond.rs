//! Right preconditioners: identity, Jacobi and zero-fill incomplete LU.
//!
//! Factor values are plain `f64` arrays so the sandbox can register them as
//! failable regions alongside the matrix values.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Relative floor for pivots: `|u_ii| < PIVOT_FLOOR * max|a_ij|` is replaced.
pub const PIVOT_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecondKind {
    #[default]
    Identity,
    Jacobi,
    Ilu0,
}

impl fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecondKind::Identity => "none",
            PrecondKind::Jacobi => "jacobi",
            PrecondKind::Ilu0 => "ilu0",
        })
    }
}

impl FromStr for PrecondKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "identity" => Ok(PrecondKind::Identity),
            "jacobi" => Ok(PrecondKind::Jacobi),
            "ilu0" => Ok(PrecondKind::Ilu0),
            other => Err(Error::invalid(format!("unknown preconditioner '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner {
    kind: PrecondKind,
    n: usize,
    inv_diag: Option<Vec<f64>>,
    /// Strictly lower part; unit diagonal implicit.
    l: Option<CsrMatrix>,
    /// Diagonal and upper part; the diagonal is the first entry of each row.
    u: Option<CsrMatrix>,
}

fn guard_pivot(p: f64, floor: f64, row: usize) -> f64 {
    if p.abs() < floor || !p.is_finite() {
        let sub = if p.is_sign_negative() { -floor } else { floor };
        log::warn!("pivot {p:e} in row {row} replaced by {sub:e}");
        sub
    } else {
        p
    }
}

impl Preconditioner {
    pub fn identity(n: usize) -> Self {
        Self {
            kind: PrecondKind::Identity,
            n,
            inv_diag: None,
            l: None,
            u: None,
        }
    }

    pub fn build(kind: PrecondKind, a: &CsrMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::invalid(format!(
                "preconditioner needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let floor = PIVOT_FLOOR * a.max_abs().max(f64::MIN_POSITIVE);
        match kind {
            PrecondKind::Identity => Ok(Self::identity(n)),
            PrecondKind::Jacobi => {
                let inv_diag = a
                    .diagonal()
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| 1.0 / guard_pivot(d, floor, i))
                    .collect();
                Ok(Self {
                    kind,
                    n,
                    inv_diag: Some(inv_diag),
                    l: None,
                    u: None,
                })
            }
            PrecondKind::Ilu0 => {
                let (l, u) = ilu0(a, floor)?;
                Ok(Self {
                    kind,
                    n,
                    inv_diag: None,
                    l: Some(l),
                    u: Some(u),
                })
            }
        }
    }

    pub fn kind(&self) -> PrecondKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn inv_diag(&self) -> Option<&[f64]> {
        self.inv_diag.as_deref()
    }

    pub fn lower(&self) -> Option<&CsrMatrix> {
        self.l.as_ref()
    }

    pub fn upper(&self) -> Option<&CsrMatrix> {
        self.u.as_ref()
    }

    /// `z = M^{-1} q`.
    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        self.apply_into(q, &mut z);
        z
    }

    pub fn apply_into(&self, q: &[f64], z: &mut [f64]) {
        assert_eq!(q.len(), self.n, "preconditioner: length mismatch");
        assert_eq!(z.len(), self.n, "preconditioner: length mismatch");
        match self.kind {
            PrecondKind::Identity => z.copy_from_slice(q),
            PrecondKind::Jacobi => {
                let d = self.inv_diag.as_ref().expect("jacobi diagonal");
                for ((zi, qi), di) in z.iter_mut().zip(q).zip(d) {
                    *zi = qi * di;
                }
            }
            PrecondKind::Ilu0 => {
                let l = self.l.as_ref().expect("ilu0 lower factor");
                let u = self.u.as_ref().expect("ilu0 upper factor");
                for i in 0..self.n {
                    let (cols, vals) = l.row(i);
                    let mut acc = q[i];
                    for (&j, &v) in cols.iter().zip(vals) {
                        acc -= v * z[j];
                    }
                    z[i] = acc;
                }
                for i in (0..self.n).rev() {
                    let (cols, vals) = u.row(i);
                    let mut acc = z[i];
                    for (&j, &v) in cols[1..].iter().zip(&vals[1..]) {
                        acc -= v * z[j];
                    }
                    z[i] = acc / vals[0];
                }
            }
        }
    }

    /// The floating-point arrays that may be registered as failable.
    pub fn value_arrays(&self) -> Vec<&[f64]> {
        match self.kind {
            PrecondKind::Identity => Vec::new(),
            PrecondKind::Jacobi => vec![self.inv_diag.as_deref().unwrap()],
            PrecondKind::Ilu0 => vec![
                self.l.as_ref().unwrap().values(),
                self.u.as_ref().unwrap().values(),
            ],
        }
    }

    pub fn value_arrays_mut(&mut self) -> Vec<&mut [f64]> {
        match self.kind {
            PrecondKind::Identity => Vec::new(),
            PrecondKind::Jacobi => vec![self.inv_diag.as_deref_mut().unwrap()],
            PrecondKind::Ilu0 => {
                let l = self.l.as_mut().unwrap().values_mut();
                let u = self.u.as_mut().unwrap().values_mut();
                vec![l, u]
            }
        }
    }
}

/// Zero-fill incomplete LU on the pattern of `a` plus its diagonal.
#[allow(clippy::needless_range_loop)]
fn ilu0(a: &CsrMatrix, floor: f64) -> Result<(CsrMatrix, CsrMatrix)> {
    let n = a.nrows();

    // working pattern: A's pattern with the diagonal forced in
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols: Vec<usize> = Vec::with_capacity(a.nnz() + n);
    let mut vals: Vec<f64> = Vec::with_capacity(a.nnz() + n);
    let mut diag_pos = vec![0usize; n];
    row_ptr.push(0);
    for i in 0..n {
        let (rc, rv) = a.row(i);
        let mut placed = false;
        for (&j, &v) in rc.iter().zip(rv) {
            if !placed && j > i {
                diag_pos[i] = cols.len();
                cols.push(i);
                vals.push(0.0);
                placed = true;
            }
            if j == i {
                placed = true;
                diag_pos[i] = cols.len();
            }
            cols.push(j);
            vals.push(v);
        }
        if !placed {
            diag_pos[i] = cols.len();
            cols.push(i);
            vals.push(0.0);
        }
        row_ptr.push(cols.len());
    }

    // IKJ elimination restricted to the pattern
    let mut pos: Vec<usize> = vec![usize::MAX; n];
    for i in 0..n {
        let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
        for p in lo..hi {
            pos[cols[p]] = p;
        }
        for p in lo..diag_pos[i] {
            let k = cols[p];
            let lik = vals[p] / vals[diag_pos[k]];
            vals[p] = lik;
            for q in diag_pos[k] + 1..row_ptr[k + 1] {
                let target = pos[cols[q]];
                if target != usize::MAX {
                    vals[target] -= lik * vals[q];
                }
            }
        }
        vals[diag_pos[i]] = guard_pivot(vals[diag_pos[i]], floor, i);
        for p in lo..hi {
            pos[cols[p]] = usize::MAX;
        }
    }

    let mut l_ptr = vec![0usize];
    let mut l_cols = Vec::new();
    let mut l_vals = Vec::new();
    let mut u_ptr = vec![0usize];
    let mut u_cols = Vec::new();
    let mut u_vals = Vec::new();
    for i in 0..n {
        for p in row_ptr[i]..row_ptr[i + 1] {
            if p < diag_pos[i] {
                l_cols.push(cols[p]);
                l_vals.push(vals[p]);
            } else {
                u_cols.push(cols[p]);
                u_vals.push(vals[p]);
            }
        }
        l_ptr.push(l_cols.len());
        u_ptr.push(u_cols.len());
    }
    Ok((
        CsrMatrix::from_raw_parts(n, n, l_ptr, l_cols, l_vals)?,
        CsrMatrix::from_raw_parts(n, n, u_ptr, u_cols, u_vals)?,
    ))
}
