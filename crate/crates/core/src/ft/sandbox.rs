use super::config::{FtConfig, Refresh};
use super::scrub::{prepare_direction, scrub_vector};
use crate::error::Result;
use crate::fault::{
    FaultLog, FaultMode, FaultPolicy, FaultRegistry, FaultTotals, RegionId, SliceMemory,
};
use crate::krylov::{gmres_with_context, GmresOptions, GmresRun, KrylovContext, OpKind};
use crate::precond::Preconditioner;
use crate::sparse::CsrMatrix;

/// Result of one sandboxed inner solve.
#[derive(Debug, Clone)]
pub struct InnerOutput {
    /// Finite approximation to `A⁻¹ q`, never NaN or infinite.
    pub z: Vec<f64>,
    pub iters: usize,
    /// Entries replaced by neighbor averages, inside the solve and at exit.
    pub repaired: usize,
}

/// A GMRES run inside the sandbox.
#[derive(Debug, Clone)]
pub struct SandboxRun {
    pub run: GmresRun,
    /// Entries repaired by scrubbing operator outputs.
    pub repaired: usize,
    /// Cumulative fault counters aligned with `run.history`.
    pub faults: Vec<FaultTotals>,
}

/// State of the sandbox between solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SandboxAudit {
    pub any_marked: bool,
    pub matrix_pristine: bool,
    pub precond_pristine: bool,
}

impl SandboxAudit {
    pub fn is_clean(&self) -> bool {
        !self.any_marked && self.matrix_pristine && self.precond_pristine
    }
}

/// Unreliable execution environment for inner solves.
///
/// Holds its own copies of the matrix and preconditioner values; these are
/// checkpointed at creation, marked failable while a solve runs and
/// refreshed afterwards. Data owned by the caller (the outer iteration) is
/// never registered.
pub struct SandboxSession {
    a: CsrMatrix,
    m: Preconditioner,
    registry: FaultRegistry,
    matrix_region: RegionId,
    precond_regions: Vec<RegionId>,
    refresh: Refresh,
    vectors_failable: bool,
    window: usize,
    inner_tol: Option<f64>,
    refreshes: usize,
}

impl SandboxSession {
    pub fn new(
        a: &CsrMatrix,
        m: &Preconditioner,
        policy: FaultPolicy,
        cfg: &FtConfig,
    ) -> Result<Self> {
        let mut registry = FaultRegistry::new(policy)?;
        let matrix_region = registry.register(a.nnz());
        registry.checkpoint(matrix_region, a.values())?;
        let mut precond_regions = Vec::new();
        for arr in m.value_arrays() {
            let id = registry.register(arr.len());
            registry.checkpoint(id, arr)?;
            precond_regions.push(id);
        }
        Ok(Self {
            a: a.clone(),
            m: m.clone(),
            registry,
            matrix_region,
            precond_regions,
            refresh: cfg.refresh,
            vectors_failable: cfg.inner_vectors_failable,
            window: cfg.repair_window,
            inner_tol: cfg.inner_tol,
            refreshes: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn registry(&self) -> &FaultRegistry {
        &self.registry
    }

    pub fn log(&self) -> &FaultLog {
        self.registry.log()
    }

    pub fn totals(&self) -> FaultTotals {
        self.registry.totals()
    }

    /// The sandbox's working copy of the matrix.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn preconditioner(&self) -> &Preconditioner {
        &self.m
    }

    /// Region copies performed by refreshes so far.
    pub fn refreshes(&self) -> usize {
        self.refreshes
    }

    /// Approximately solves `A z = q` with `budget` GMRES iterations from a
    /// zero guess. A zero budget returns `z = q`.
    pub fn inner_solve(&mut self, q: &[f64], budget: usize) -> InnerOutput {
        if budget == 0 {
            return InnerOutput {
                z: q.to_vec(),
                iters: 0,
                repaired: 0,
            };
        }
        let opts = GmresOptions {
            tol: self.inner_tol,
            ..GmresOptions::fixed(budget)
        };
        let out = self.run_gmres(q, None, opts);
        let mut z = out.run.x;
        let repaired = out.repaired + prepare_direction(&mut z, self.window);
        InnerOutput {
            z,
            iters: out.run.iters,
            repaired,
        }
    }

    /// Runs one GMRES solve inside the sandbox, then refreshes.
    pub fn run_gmres(&mut self, b: &[f64], x0: Option<&[f64]>, opts: GmresOptions) -> SandboxRun {
        self.enter();
        let start = self.registry.totals();
        let mut ctx = SandboxContext {
            a: &mut self.a,
            m: &mut self.m,
            registry: &mut self.registry,
            matrix_region: self.matrix_region,
            precond_regions: &self.precond_regions,
            basis_regions: Vec::new(),
            vectors_failable: self.vectors_failable,
            window: self.window,
            repaired: 0,
            faults: Vec::new(),
        };
        let run = gmres_with_context(&mut ctx, b, x0, opts);
        let repaired = ctx.repaired;
        let mut faults = std::mem::take(&mut ctx.faults);
        faults.insert(0, start);
        let basis_regions = std::mem::take(&mut ctx.basis_regions);
        for id in basis_regions {
            self.registry
                .unregister(id)
                .expect("basis region registered");
        }
        self.exit();
        SandboxRun {
            run,
            repaired,
            faults,
        }
    }

    fn operator_regions(&self) -> impl Iterator<Item = RegionId> + '_ {
        std::iter::once(self.matrix_region).chain(self.precond_regions.iter().copied())
    }

    fn enter(&mut self) {
        let ids: Vec<RegionId> = self.operator_regions().collect();
        for id in ids {
            self.registry
                .mark_failable(id)
                .expect("operator region registered");
        }
    }

    fn exit(&mut self) {
        let ids: Vec<RegionId> = self.operator_regions().collect();
        for id in ids {
            self.registry
                .unmark_failable(id)
                .expect("operator region registered");
        }
        self.refresh();
    }

    /// Restores operator values per the refresh policy.
    pub fn refresh(&mut self) {
        let refresh = self.refresh;
        let registry = &mut self.registry;
        let mut restore = |id: RegionId, data: &mut [f64]| -> bool {
            match refresh {
                Refresh::Always => {
                    registry.restore(id, data).expect("checkpointed region");
                    true
                }
                Refresh::OnDetection => registry
                    .restore_if_detected(id, data)
                    .expect("checkpointed region"),
            }
        };
        let mut copied = usize::from(restore(self.matrix_region, self.a.values_mut()));
        for (id, arr) in self.precond_regions.iter().zip(self.m.value_arrays_mut()) {
            copied += usize::from(restore(*id, arr));
        }
        self.refreshes += copied;
    }

    /// Checks the hygiene contract: nothing marked, operators equal to
    /// their checkpoints.
    pub fn audit(&self) -> SandboxAudit {
        let matrix_pristine = self
            .registry
            .matches_checkpoint(self.matrix_region, self.a.values())
            .expect("checkpointed region");
        let precond_pristine =
            self.precond_regions
                .iter()
                .zip(self.m.value_arrays())
                .all(|(id, arr)| {
                    self.registry
                        .matches_checkpoint(*id, arr)
                        .expect("checkpointed region")
                });
        SandboxAudit {
            any_marked: self.registry.any_failable(),
            matrix_pristine,
            precond_pristine,
        }
    }
}

/// [`KrylovContext`] over the sandbox's failable operators. Every operator
/// output is an injection point: the deterministic pattern corrupts
/// matrix-vector products, the Poisson clock flips bits in marked storage.
pub struct SandboxContext<'s> {
    a: &'s mut CsrMatrix,
    m: &'s mut Preconditioner,
    registry: &'s mut FaultRegistry,
    matrix_region: RegionId,
    precond_regions: &'s [RegionId],
    basis_regions: Vec<RegionId>,
    vectors_failable: bool,
    window: usize,
    repaired: usize,
    faults: Vec<FaultTotals>,
}

impl KrylovContext for SandboxContext<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn matvec(&mut self, x: &[f64], y: &mut [f64]) {
        self.a.spmv_into(x, y);
    }

    fn precondition(&mut self, q: &[f64], z: &mut [f64]) {
        self.m.apply_into(q, z);
    }

    fn injection_point(&mut self, op: OpKind, out: &mut [f64], basis: &mut [Vec<f64>]) {
        match self.registry.policy().mode {
            FaultMode::None => {}
            FaultMode::Deterministic => {
                if op == OpKind::MatVec {
                    self.registry
                        .apply_deterministic_fault(out)
                        .expect("validated pattern");
                }
            }
            FaultMode::Poisson => {
                let step = self.registry.policy().time_step;
                let mut mem = SliceMemory::new().with(self.matrix_region, self.a.values_mut());
                for (id, arr) in self.precond_regions.iter().zip(self.m.value_arrays_mut()) {
                    mem.push(*id, arr);
                }
                for (id, v) in self.basis_regions.iter().zip(basis.iter_mut()) {
                    mem.push(*id, v);
                }
                self.registry.advance_clock(step, &mut mem);
            }
        }
        self.repaired += scrub_vector(out, self.window);
    }

    fn iteration_done(&mut self, _iteration: usize) {
        self.faults.push(self.registry.totals());
    }

    fn basis_extended(&mut self, basis: &mut [Vec<f64>]) {
        if !self.vectors_failable {
            return;
        }
        while self.basis_regions.len() < basis.len() {
            let len = basis[self.basis_regions.len()].len();
            let id = self.registry.register(len);
            self.registry.mark_failable(id).expect("fresh region");
            self.basis_regions.push(id);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precond::PrecondKind;
    use crate::sparse::gen_log_diagonal;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn zero_budget_is_identity() {
        let a = tridiag(5);
        let m = Preconditioner::identity(5);
        let mut s = SandboxSession::new(&a, &m, FaultPolicy::none(), &FtConfig::default()).unwrap();
        let q = [1.0, 2.0, 3.0, 4.0, 5.0];
        let out = s.inner_solve(&q, 0);
        assert_eq!(out.z, q.to_vec());
        assert_eq!(out.iters, 0);
    }

    #[test]
    fn fault_free_inner_solve_matches_reliable_gmres() {
        let a = tridiag(30);
        let m = Preconditioner::build(PrecondKind::Ilu0, &a).unwrap();
        let q: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let mut s = SandboxSession::new(&a, &m, FaultPolicy::none(), &FtConfig::default()).unwrap();
        let out = s.inner_solve(&q, 10);
        let reference = gmres_with_context(
            &mut crate::krylov::Reliable::new(&a, &m),
            &q,
            None,
            GmresOptions::fixed(10),
        );
        assert!(crate::sparse::vector::bitwise_eq(&out.z, &reference.x));
        assert!(s.audit().is_clean());
    }

    #[test]
    fn pattern_hits_every_third_matvec() {
        let a = gen_log_diagonal(50, 2.0).unwrap();
        let m = Preconditioner::identity(50);
        let policy = FaultPolicy::pattern_bits(&[0, 0, 1]);
        let mut s = SandboxSession::new(&a, &m, policy, &FtConfig::default()).unwrap();
        s.inner_solve(&[1.0; 50], 9);
        assert_eq!(s.registry().pattern_position(), 9);
        assert_eq!(s.totals().injected, 3);
    }

    #[test]
    fn heavy_poisson_faults_leave_sandbox_clean() {
        let a = tridiag(200);
        let m = Preconditioner::build(PrecondKind::Ilu0, &a).unwrap();
        let policy = FaultPolicy::poisson(1e6, 7).with_time_step(1.0);
        let mut s = SandboxSession::new(&a, &m, policy, &FtConfig::default()).unwrap();
        let out = s.inner_solve(&vec![1.0; 200], 20);
        assert!(s.totals().injected > 0);
        assert!(out.z.iter().all(|v| v.is_finite()));
        let audit = s.audit();
        assert!(audit.is_clean(), "{audit:?}");
        assert_eq!(s.matrix().row_ptr(), a.row_ptr());
        assert_eq!(s.matrix().col_idx(), a.col_idx());
    }

    #[test]
    fn on_detection_skips_undetected_faults() {
        let a = tridiag(100);
        let m = Preconditioner::identity(100);
        let policy = FaultPolicy::poisson(1e7, 3)
            .with_time_step(1.0)
            .with_p_detect(0.0);
        let cfg = FtConfig {
            refresh: Refresh::OnDetection,
            inner_vectors_failable: false,
            ..FtConfig::default()
        };
        let mut s = SandboxSession::new(&a, &m, policy, &cfg).unwrap();
        s.inner_solve(&vec![1.0; 100], 5);
        assert!(s.totals().injected > 0);
        assert_eq!(s.refreshes(), 0);
        assert!(!s.audit().matrix_pristine);
        assert!(!s.audit().any_marked);
    }
}
