//! Generalized Stokes solvers.
//!
//! All operators act on the free velocity unknowns (wall unknowns removed)
//! and on every pressure unknown. Inhomogeneous wall data enters through the
//! right-hand side: `F = F_load − A_fc g` and `G = −B_c g`.

mod methods;
mod operators;

use alloc::vec::Vec;
use core::cell::{Cell, OnceCell, RefCell};

pub use methods::{
    coupled_residual, method1_solve, method2_solve, projection_step, schur_residual, MethodReport, ProjectionReport,
    SolverOptions,
};
pub use operators::BmbtMass;

use crate::fem::{
    assemble, assemble_load, assemble_velocity_system, lump_velocity_mass, BoundaryCondition, MatrixKind, MixedSpace,
};
use crate::krylov::KrylovReport;
use crate::multigrid::{amg_setup, AmgHierarchy, AmgMode};
use crate::sparse::vector::remove_mean;
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

/// Relative threshold of every inner solve.
pub const INNER_TOL: f64 = 1e-10;

/// `τ = N^{-1/2}` for `N` velocity nodes.
pub fn compute_tau(velocity_nodes: usize) -> Result<f64> {
    if velocity_nodes == 0 {
        return Err(Error::InvalidParameter {
            name: "velocity_nodes",
            value: 0.0,
        });
    }
    Ok(1.0 / libm::sqrt(velocity_nodes as f64))
}

/// How the constant pressure mode is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NullspacePolicy {
    /// Full Dirichlet data; pressure vectors are kept at zero mean.
    ProjectMeanZero,
    /// Full Dirichlet data; the first pressure unknown is held at zero.
    Pinned,
    /// Part of the boundary carries natural conditions, so there is no
    /// pressure nullspace.
    OpenBoundary,
}

/// Velocity preconditioners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VelocityPrecondKind {
    /// `A + λμD`
    A1,
    /// `A`
    A2,
    /// `M_V/τ + μL_V`, without the grad-div and augmentation terms
    A3,
}

/// A velocity preconditioner matrix together with its AMG mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityPrecond {
    pub kind: VelocityPrecondKind,
    pub mode: AmgMode,
}

impl VelocityPrecond {
    pub const A3_2VC: VelocityPrecond = VelocityPrecond {
        kind: VelocityPrecondKind::A3,
        mode: AmgMode::TWO_VC,
    };
}

/// Pressure Schur complement preconditioners `μ(1+λ)(M_Q)_a⁻¹ + τ⁻¹X⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchurPrecondKind {
    /// `X = B (M_V)_b⁻¹ Bᵀ`
    C { a: AmgMode, b: AmgMode },
    /// `X = B Λ_V⁻¹ Bᵀ`
    CLambda { a: AmgMode },
    /// `X = (L_Q)_b`
    CDelta { a: AmgMode, b: AmgMode },
}

/// Matrices that get an AMG hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HierarchyKind {
    MassPressure,
    MassVelocity,
    PressureLaplacian,
    /// `M_Q + L_Q`
    ShiftedPressureLaplacian,
    Velocity(VelocityPrecondKind),
}

impl HierarchyKind {
    const COUNT: usize = 7;

    fn index(self) -> usize {
        match self {
            HierarchyKind::MassPressure => 0,
            HierarchyKind::MassVelocity => 1,
            HierarchyKind::PressureLaplacian => 2,
            HierarchyKind::ShiftedPressureLaplacian => 3,
            HierarchyKind::Velocity(VelocityPrecondKind::A1) => 4,
            HierarchyKind::Velocity(VelocityPrecondKind::A2) => 5,
            HierarchyKind::Velocity(VelocityPrecondKind::A3) => 6,
        }
    }

    /// Strength threshold: 0.7 for the operators carrying the grad-div
    /// coupling, 0.1 otherwise.
    pub fn strong_threshold(self) -> f64 {
        match self {
            HierarchyKind::Velocity(VelocityPrecondKind::A1) | HierarchyKind::Velocity(VelocityPrecondKind::A2) => 0.7,
            _ => 0.1,
        }
    }
}

/// Right-hand side on the reduced unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesRhs {
    /// Free velocity unknowns.
    pub f: Vec<f64>,
    /// Pressure unknowns.
    pub g: Vec<f64>,
}

/// Cumulative inner work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InnerStats {
    /// CG iterations of every velocity solve.
    pub cg_iterations: usize,
    /// GMRES iterations of every `B·mass⁻¹·Bᵀ` solve.
    pub gmres_iterations: usize,
    pub velocity_solves: usize,
}

impl InnerStats {
    pub fn total_iterations(&self) -> usize {
        self.cg_iterations + self.gmres_iterations
    }

    pub fn since(&self, earlier: &InnerStats) -> InnerStats {
        InnerStats {
            cg_iterations: self.cg_iterations - earlier.cg_iterations,
            gmres_iterations: self.gmres_iterations - earlier.gmres_iterations,
            velocity_solves: self.velocity_solves - earlier.velocity_solves,
        }
    }
}

/// One finished Krylov solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveRecord {
    pub stage: &'static str,
    pub rel_tol: f64,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

/// A discretized generalized Stokes problem with its lazily built AMG
/// hierarchies.
pub struct StokesSystem {
    pub space: MixedSpace,
    pub tau: f64,
    pub mu: f64,
    pub lambda: f64,
    pub policy: NullspacePolicy,
    pub bc: BoundaryCondition,
    free: Vec<usize>,
    /// `M_V/τ + μE_V`
    pub a: SparseMatrix,
    pub m_v: SparseMatrix,
    pub l_v: SparseMatrix,
    pub e_v: SparseMatrix,
    pub d: SparseMatrix,
    /// Diagonal of `Λ_V`.
    pub lumped_v: Vec<f64>,
    pub b: SparseMatrix,
    pub bt: SparseMatrix,
    pub m_q: SparseMatrix,
    pub l_q: SparseMatrix,
    a_fc: SparseMatrix,
    b_c: SparseMatrix,
    hierarchies: [OnceCell<AmgHierarchy>; HierarchyKind::COUNT],
    stats: Cell<InnerStats>,
    records: RefCell<Vec<SolveRecord>>,
}

impl core::fmt::Debug for StokesSystem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("StokesSystem")
            .field("n_velocity", &self.n_velocity())
            .field("n_pressure", &self.n_pressure())
            .field("tau", &self.tau)
            .field("mu", &self.mu)
            .field("lambda", &self.lambda)
            .field("policy", &self.policy)
            .finish()
    }
}

impl StokesSystem {
    /// System with `τ = N^{-1/2}` and homogeneous wall data.
    pub fn new(space: MixedSpace, mu: f64, lambda: f64, policy: NullspacePolicy) -> Result<Self> {
        let tau = compute_tau(space.n_velocity_nodes())?;
        let bc = BoundaryCondition::homogeneous(&space);
        Self::with_boundary(space, tau, mu, lambda, policy, bc)
    }

    pub fn with_boundary(
        space: MixedSpace,
        tau: f64,
        mu: f64,
        lambda: f64,
        policy: NullspacePolicy,
        bc: BoundaryCondition,
    ) -> Result<Self> {
        crate::fem::check_tau_mu(tau, mu)?;
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter { name: "mu", value: mu });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
            });
        }
        let open = space.mesh.has_open_boundary();
        if open != (policy == NullspacePolicy::OpenBoundary) {
            return Err(Error::InvalidMesh(if open {
                "a mesh with an open boundary needs the open-boundary policy".into()
            } else {
                "the open-boundary policy needs a mesh with an open boundary".into()
            }));
        }
        let nv = space.n_velocity();
        let free = bc.free_dofs(nv);
        let constrained = &bc.constrained_dofs;
        let all_p: Vec<usize> = (0..space.n_pressure()).collect();

        let a_full = assemble_velocity_system(&space, tau, mu)?;
        let b_full = assemble(MatrixKind::Divergence, &space);
        let reduce = |m: &SparseMatrix| m.submatrix(&free, &free);
        let a = reduce(&a_full);
        let a_fc = a_full.submatrix(&free, constrained);
        let b = b_full.submatrix(&all_p, &free);
        let b_c = b_full.submatrix(&all_p, constrained);
        let bt = b.transpose();
        let m_v = reduce(&assemble(MatrixKind::MassVelocity, &space));
        let l_v = reduce(&assemble(MatrixKind::VectorLaplacian, &space));
        let e_v = reduce(&assemble(MatrixKind::StrainStiffness, &space));
        let d = reduce(&assemble(MatrixKind::GradDiv, &space));
        let lumped_full = lump_velocity_mass(&space).diagonal();
        let lumped_v = free.iter().map(|&i| lumped_full[i]).collect();
        let m_q = assemble(MatrixKind::MassPressure, &space);
        let l_q = assemble(MatrixKind::PressureLaplacian, &space);
        Ok(Self {
            space,
            tau,
            mu,
            lambda,
            policy,
            bc,
            free,
            a,
            m_v,
            l_v,
            e_v,
            d,
            lumped_v,
            b,
            bt,
            m_q,
            l_q,
            a_fc,
            b_c,
            hierarchies: Default::default(),
            stats: Cell::new(InnerStats::default()),
            records: RefCell::new(Vec::new()),
        })
    }

    /// Free velocity unknowns.
    pub fn n_velocity(&self) -> usize {
        self.free.len()
    }

    pub fn n_pressure(&self) -> usize {
        self.m_q.n_rows()
    }

    /// Indices of the free unknowns in the full velocity vector.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    /// Reduced right-hand side from a full-length velocity load vector.
    pub fn rhs(&self, load: &[f64]) -> Result<StokesRhs> {
        if load.len() != self.space.n_velocity() {
            return Err(Error::DimensionMismatch {
                expected: self.space.n_velocity(),
                actual: load.len(),
            });
        }
        let g_c = &self.bc.values;
        let mut f: Vec<f64> = self.free.iter().map(|&i| load[i]).collect();
        let lift = self.a_fc.spmv(g_c)?;
        for (fi, li) in f.iter_mut().zip(&lift) {
            *fi -= li;
        }
        let mut g = self.b_c.spmv(g_c)?;
        g.iter_mut().for_each(|v| *v = -*v);
        self.project(&mut g);
        Ok(StokesRhs { f, g })
    }

    /// Right-hand side of the velocity problem `A_λ u = F` alone, with the
    /// wall data lifted through the whole of `A_λ`.
    pub fn velocity_rhs(&self, load: &[f64]) -> Result<Vec<f64>> {
        let rhs = self.rhs(load)?;
        let mut f = rhs.f;
        if self.lambda != 0.0 {
            let bc_g = self.b_c.spmv(&self.bc.values)?;
            if bc_g.iter().any(|&v| v != 0.0) {
                let z = self.mass_pressure_solve(&bc_g)?;
                let w = self.bt.spmv(&z)?;
                crate::sparse::vector::axpy(-self.lambda * self.mu, &w, &mut f);
            }
        }
        Ok(f)
    }

    /// [`rhs`](Self::rhs) of the load of a forcing field.
    pub fn rhs_from_forcing<F>(&self, forcing: F) -> Result<StokesRhs>
    where
        F: Fn(f64, f64) -> [f64; 2],
    {
        self.rhs(&assemble_load(&self.space, forcing))
    }

    /// Full velocity vector: free values plus the wall data.
    pub fn full_velocity(&self, u_free: &[f64]) -> Vec<f64> {
        let mut u = self.bc.lifting(self.space.n_velocity());
        for (&i, &v) in self.free.iter().zip(u_free) {
            u[i] = v;
        }
        u
    }

    /// Applies the nullspace policy to a pressure vector.
    pub fn project(&self, p: &mut [f64]) {
        match self.policy {
            NullspacePolicy::ProjectMeanZero => remove_mean(p),
            NullspacePolicy::Pinned => {
                if let Some(first) = p.first_mut() {
                    *first = 0.0;
                }
            }
            NullspacePolicy::OpenBoundary => {}
        }
    }

    /// Matrix behind a hierarchy kind.
    pub fn hierarchy_matrix(&self, kind: HierarchyKind) -> SparseMatrix {
        match kind {
            HierarchyKind::MassPressure => self.m_q.clone(),
            HierarchyKind::MassVelocity => self.m_v.clone(),
            HierarchyKind::PressureLaplacian => self.l_q.clone(),
            HierarchyKind::ShiftedPressureLaplacian => self.m_q.add(1.0, &self.l_q, 1.0),
            HierarchyKind::Velocity(VelocityPrecondKind::A1) => self.a.add(1.0, &self.d, self.lambda * self.mu),
            HierarchyKind::Velocity(VelocityPrecondKind::A2) => self.a.clone(),
            HierarchyKind::Velocity(VelocityPrecondKind::A3) => self.m_v.add(1.0 / self.tau, &self.l_v, self.mu),
        }
    }

    /// The hierarchy of `kind`, built on first use.
    pub fn hierarchy(&self, kind: HierarchyKind) -> Result<&AmgHierarchy> {
        let cell = &self.hierarchies[kind.index()];
        if let Some(h) = cell.get() {
            return Ok(h);
        }
        let block = match kind {
            HierarchyKind::MassVelocity | HierarchyKind::Velocity(_) => 2,
            _ => 1,
        };
        let h = amg_setup(&self.hierarchy_matrix(kind), kind.strong_threshold(), block)?;
        Ok(cell.get_or_init(|| h))
    }

    /// Builds the given hierarchies now, so later timings exclude setup.
    pub fn prepare(&self, kinds: &[HierarchyKind]) -> Result<()> {
        for &k in kinds {
            self.hierarchy(k)?;
        }
        Ok(())
    }

    pub fn stats(&self) -> InnerStats {
        self.stats.get()
    }

    /// Every Krylov solve finished so far, inner ones included.
    pub fn records(&self) -> Vec<SolveRecord> {
        self.records.borrow().clone()
    }

    pub fn clear_records(&self) {
        self.records.borrow_mut().clear();
    }

    fn record(&self, stage: &'static str, rel_tol: f64, report: &KrylovReport) {
        self.records.borrow_mut().push(SolveRecord {
            stage,
            rel_tol,
            iterations: report.iterations,
            final_residual: report.final_residual,
            converged: report.converged,
        });
    }

    fn bump(&self, f: impl FnOnce(&mut InnerStats)) {
        let mut s = self.stats.get();
        f(&mut s);
        self.stats.set(s);
    }
}
