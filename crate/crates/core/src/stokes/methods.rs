use alloc::vec::Vec;

use super::{HierarchyKind, InnerStats, SchurPrecondKind, StokesRhs, StokesSystem, VelocityPrecond, INNER_TOL};
use crate::clock::Stopwatch;
use crate::krylov::{cg, gmres, AmgOperator, FnOperator, KrylovReport, LinearOperator};
use crate::multigrid::AmgMode;
use crate::sparse::vector::{axpy, norm, remove_mean, scale};
use crate::{Error, Result};

/// Outer Krylov settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Tolerance of the velocity solves inside `S_λ` in Method 1.
    pub schur_inner_tol: f64,
}

impl SolverOptions {
    /// Options for an outer tolerance, with the Schur inner solves two
    /// digits tighter so the outer residual holds for the exact `S_λ`.
    pub fn with_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            restart: crate::krylov::DEFAULT_RESTART,
            max_iter: 1000,
            schur_inner_tol: INNER_TOL.min(1e-2 * rel_tol),
        }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::with_tol(1e-10)
    }
}

/// Outcome of [`method1_solve`] or [`method2_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    /// The outer GMRES.
    pub outer: KrylovReport,
    /// Velocity back-solve of Method 1.
    pub back_solve: Option<KrylovReport>,
    /// Inner work spent by this call.
    pub inner: InnerStats,
    /// Seconds spent in the call (hierarchies built beforehand excluded).
    pub wall_time: f64,
    pub converged: bool,
}

/// Outcome of [`projection_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub velocity: KrylovReport,
    pub laplacian: KrylovReport,
    pub mass: KrylovReport,
    pub wall_time: f64,
    pub converged: bool,
}

/// `F_λ = F + λμ Bᵀ M_Q⁻¹ G`, the velocity right-hand side of the
/// augmented system (unchanged solution since `BU = G`).
fn augmented_rhs(sys: &StokesSystem, rhs: &StokesRhs) -> Result<Vec<f64>> {
    let mut f = rhs.f.clone();
    if sys.lambda != 0.0 && norm(&rhs.g) > 0.0 {
        let z = sys.mass_pressure_solve(&rhs.g)?;
        let w = sys.bt.spmv(&z)?;
        axpy(sys.lambda * sys.mu, &w, &mut f);
    }
    Ok(f)
}

fn check_rhs(sys: &StokesSystem, rhs: &StokesRhs) -> Result<()> {
    for (expected, actual) in [(sys.n_velocity(), rhs.f.len()), (sys.n_pressure(), rhs.g.len())] {
        if expected != actual {
            return Err(Error::DimensionMismatch { expected, actual });
        }
    }
    Ok(())
}

/// Schur-complement solve: GMRES on `S_λ P = G − B A_λ⁻¹ F_λ` preconditioned
/// by `schur`, then `A U = F + Bᵀ P`.
///
/// The outer GMRES is flexible because both `S_λ` and the preconditioner
/// contain inner iterative solves.
pub fn method1_solve(
    sys: &StokesSystem,
    rhs: &StokesRhs,
    schur: SchurPrecondKind,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<f64>, MethodReport)> {
    check_rhs(sys, rhs)?;
    let start = sys.stats();
    let clock = Stopwatch::start();
    let f_lambda = augmented_rhs(sys, rhs)?;
    let (v, rep) = sys.solve_velocity(&f_lambda, VelocityPrecond::A3_2VC, opts.schur_inner_tol)?;
    if !rep.converged {
        return Err(Error::InnerSolve {
            stage: "method 1 right-hand side",
            residual: rep.final_residual,
        });
    }
    let bv = sys.b.spmv(&v)?;
    let mut g = rhs.g.clone();
    axpy(-1.0, &bv, &mut g);
    sys.project(&mut g);
    let op = sys.schur_operator(opts.schur_inner_tol);
    let pc = sys.schur_precond_operator(schur);
    let (mut p, outer) = gmres(&op, &pc, &g, opts.rel_tol, opts.restart, opts.max_iter)?;
    sys.project(&mut p);
    sys.record("method 1 outer", opts.rel_tol, &outer);
    let mut f = rhs.f.clone();
    axpy(1.0, &sys.bt.spmv(&p)?, &mut f);
    let (u, back) = sys.solve_plain_velocity(&f, VelocityPrecond::A3_2VC, INNER_TOL.min(opts.rel_tol))?;
    let converged = outer.converged && back.converged;
    let report = MethodReport {
        outer,
        back_solve: Some(back),
        inner: sys.stats().since(&start),
        wall_time: clock.seconds(),
        converged,
    };
    Ok((u, p, report))
}

/// `[A_λ u − Bᵀp; B u]` with the pressure rows projected.
fn coupled_apply(sys: &StokesSystem, x: &[f64], y: &mut [f64]) -> Result<()> {
    let nv = sys.n_velocity();
    let (xu, xp) = x.split_at(nv);
    let (yu, yp) = y.split_at_mut(nv);
    sys.apply_a_lambda(xu, yu)?;
    let btp = sys.bt.spmv(xp)?;
    axpy(-1.0, &btp, yu);
    sys.b.apply_into(xu, yp);
    sys.project(yp);
    Ok(())
}

/// Flexible GMRES on the coupled augmented system with the block-triangular
/// preconditioner of the exact factorization, `A_λ⁻¹` replaced by one
/// application of `velocity` and `S_λ⁻¹` by `schur`.
pub fn method2_solve(
    sys: &StokesSystem,
    rhs: &StokesRhs,
    schur: SchurPrecondKind,
    velocity: VelocityPrecond,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<f64>, MethodReport)> {
    check_rhs(sys, rhs)?;
    let nv = sys.n_velocity();
    let n = nv + sys.n_pressure();
    let start = sys.stats();
    let clock = Stopwatch::start();
    let mut b = augmented_rhs(sys, rhs)?;
    b.extend_from_slice(&rhs.g);
    sys.project(&mut b[nv..]);
    let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| coupled_apply(sys, x, y));
    let pc = FnOperator::new(n, |r: &[f64], y: &mut [f64]| {
        let (ru, rp) = r.split_at(nv);
        let w = sys.apply_velocity_precond(velocity, ru)?;
        let mut q = rp.to_vec();
        axpy(-1.0, &sys.b.spmv(&w)?, &mut q);
        sys.project(&mut q);
        let yp = sys.apply_schur_precond(schur, &q)?;
        let correction = sys.apply_velocity_precond(velocity, &sys.bt.spmv(&yp)?)?;
        let (yu, ypo) = y.split_at_mut(nv);
        yu.copy_from_slice(&w);
        axpy(1.0, &correction, yu);
        ypo.copy_from_slice(&yp);
        Ok(())
    })
    .variable();
    let (x, outer) = gmres(&op, &pc, &b, opts.rel_tol, opts.restart, opts.max_iter)?;
    sys.record("method 2 outer", opts.rel_tol, &outer);
    let (u, p) = x.split_at(nv);
    let mut p = p.to_vec();
    sys.project(&mut p);
    let converged = outer.converged;
    let report = MethodReport {
        outer,
        back_solve: None,
        inner: sys.stats().since(&start),
        wall_time: clock.seconds(),
        converged,
    };
    Ok((u.to_vec(), p, report))
}

/// One pressure-correction step: `A U* = F`, then a pressure Laplacian and
/// a pressure mass solve on the divergence defect `d = B U* − G`,
/// `P = φ + δ` with `L_Q φ = −d/τ` and `M_Q δ = −μ d`. Every stage is CG to
/// `opts.rel_tol` preconditioned by two V-cycles.
pub fn projection_step(
    sys: &StokesSystem,
    rhs: &StokesRhs,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<f64>, ProjectionReport)> {
    check_rhs(sys, rhs)?;
    let clock = Stopwatch::start();
    let (u, velocity) = sys.solve_plain_velocity(&rhs.f, VelocityPrecond::A3_2VC, opts.rel_tol)?;
    let mut d = sys.b.spmv(&u)?;
    axpy(-1.0, &rhs.g, &mut d);
    remove_mean(&mut d);

    let lq = sys.hierarchy(HierarchyKind::PressureLaplacian)?;
    let lq_pc = FnOperator::new(sys.n_pressure(), |x: &[f64], y: &mut [f64]| {
        lq.fixed_cycles_into(x, y, 2);
        remove_mean(y);
        Ok(())
    })
    .symmetric();
    let mut rhs_phi = d.clone();
    scale(-1.0 / sys.tau, &mut rhs_phi);
    let (phi, laplacian) = cg(&sys.l_q, &lq_pc, &rhs_phi, opts.rel_tol, opts.max_iter)?;
    sys.record("projection laplacian", opts.rel_tol, &laplacian);

    let mq = AmgOperator::new(sys.hierarchy(HierarchyKind::MassPressure)?, AmgMode::TWO_VC);
    let mut rhs_delta = d;
    scale(-sys.mu, &mut rhs_delta);
    let (delta, mass) = cg(&sys.m_q, &mq, &rhs_delta, opts.rel_tol, opts.max_iter)?;
    sys.record("projection mass", opts.rel_tol, &mass);

    let mut p = phi;
    axpy(1.0, &delta, &mut p);
    sys.project(&mut p);
    let converged = velocity.converged && laplacian.converged && mass.converged;
    let report = ProjectionReport {
        velocity,
        laplacian,
        mass,
        wall_time: clock.seconds(),
        converged,
    };
    Ok((u, p, report))
}

/// The relative residual `‖S_λP − rhs‖/‖rhs‖` of a Method 1 pressure,
/// recomputed with inner solves at `inner_tol`.
pub fn schur_residual(sys: &StokesSystem, rhs: &StokesRhs, p: &[f64], inner_tol: f64) -> Result<f64> {
    check_rhs(sys, rhs)?;
    let f_lambda = augmented_rhs(sys, rhs)?;
    let (v, _) = sys.solve_velocity(&f_lambda, VelocityPrecond::A3_2VC, inner_tol)?;
    let mut g = rhs.g.clone();
    axpy(-1.0, &sys.b.spmv(&v)?, &mut g);
    sys.project(&mut g);
    let mut sp = sys.apply_schur(p, inner_tol)?;
    axpy(-1.0, &g, &mut sp);
    Ok(norm(&sp) / norm(&g))
}

/// The relative residual of the coupled augmented system at `(u, p)`.
pub fn coupled_residual(sys: &StokesSystem, rhs: &StokesRhs, u: &[f64], p: &[f64]) -> Result<f64> {
    check_rhs(sys, rhs)?;
    let nv = sys.n_velocity();
    let mut b = augmented_rhs(sys, rhs)?;
    b.extend_from_slice(&rhs.g);
    sys.project(&mut b[nv..]);
    let mut x = u.to_vec();
    x.extend_from_slice(p);
    let mut y = alloc::vec![0.0; x.len()];
    coupled_apply(sys, &x, &mut y)?;
    axpy(-1.0, &b, &mut y);
    Ok(norm(&y) / norm(&b))
}

impl LinearOperator for StokesSystem {
    fn dim(&self) -> usize {
        self.n_velocity()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_a_lambda(x, y)
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}
