use alloc::vec;
use alloc::vec::Vec;

use super::{HierarchyKind, SchurPrecondKind, StokesSystem, VelocityPrecond, VelocityPrecondKind, INNER_TOL};
use crate::krylov::{cg, flexible_cg, gmres, AmgOperator, FnOperator, KrylovReport, LinearOperator, DEFAULT_RESTART};
use crate::multigrid::AmgMode;
use crate::sparse::vector::{axpy, remove_mean, scale};
use crate::{Error, Result};

/// Iteration cap of every inner Krylov solve.
const INNER_MAX_ITER: usize = 2000;

/// Velocity mass inverse inside `B·M⁻¹·Bᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BmbtMass {
    /// `(M_V)_th⁻¹`
    ConsistentTh,
    /// `(M_V)_2Vc⁻¹`
    Consistent2Vc,
    /// `Λ_V⁻¹`
    Lumped,
}

impl StokesSystem {
    /// `y = A x + λμ Bᵀ M_Q⁻¹ B x` with a threshold solve for `M_Q⁻¹`.
    pub fn apply_a_lambda(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.check_velocity(x)?;
        self.check_velocity(y)?;
        self.a.apply_into(x, y);
        if self.lambda == 0.0 {
            return Ok(());
        }
        let bx = self.b.spmv(x)?;
        let z = self.mass_pressure_solve(&bx)?;
        let mut w = self.bt.spmv(&z)?;
        scale(self.lambda * self.mu, &mut w);
        axpy(1.0, &w, y);
        Ok(())
    }

    /// `A_λ` as an operator.
    pub fn a_lambda_operator(&self) -> impl LinearOperator + '_ {
        FnOperator::new(self.n_velocity(), move |x: &[f64], y: &mut [f64]| {
            self.apply_a_lambda(x, y)
        })
        .symmetric()
    }

    /// `M_Q⁻¹ v` by V-cycles to the inner threshold.
    pub(crate) fn mass_pressure_solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .hierarchy(HierarchyKind::MassPressure)?
            .apply(v, AmgMode::ToThreshold(INNER_TOL))?
            .x)
    }

    fn amg_solve(&self, kind: HierarchyKind, mode: AmgMode, v: &[f64]) -> Result<Vec<f64>> {
        let h = self.hierarchy(kind)?;
        Ok(match mode {
            AmgMode::FixedVCycles(k) if k > 0 => {
                let mut x = vec![0.0; v.len()];
                h.fixed_cycles_into(v, &mut x, k);
                x
            }
            mode => h.apply(v, mode)?.x,
        })
    }

    /// One application of a velocity preconditioner.
    pub fn apply_velocity_precond(&self, precond: VelocityPrecond, r: &[f64]) -> Result<Vec<f64>> {
        self.check_velocity(r)?;
        self.bump(|s| s.velocity_solves += 1);
        self.amg_solve(HierarchyKind::Velocity(precond.kind), precond.mode, r)
    }

    /// CG on `A_λ` preconditioned by `precond`; the flexible variant is used
    /// for a threshold-mode preconditioner. The report is returned whether
    /// or not the tolerance was met.
    pub fn solve_velocity(
        &self,
        rhs: &[f64],
        precond: VelocityPrecond,
        rel_tol: f64,
    ) -> Result<(Vec<f64>, KrylovReport)> {
        self.check_velocity(rhs)?;
        self.velocity_cg(&self.a_lambda_operator(), rhs, precond, rel_tol, "velocity")
    }

    /// CG on `A` itself (no augmentation), as in the velocity back-solve.
    pub fn solve_plain_velocity(
        &self,
        rhs: &[f64],
        precond: VelocityPrecond,
        rel_tol: f64,
    ) -> Result<(Vec<f64>, KrylovReport)> {
        self.check_velocity(rhs)?;
        self.velocity_cg(&self.a, rhs, precond, rel_tol, "velocity back-solve")
    }

    fn velocity_cg(
        &self,
        op: &dyn LinearOperator,
        rhs: &[f64],
        precond: VelocityPrecond,
        rel_tol: f64,
        stage: &'static str,
    ) -> Result<(Vec<f64>, KrylovReport)> {
        let h = self.hierarchy(HierarchyKind::Velocity(precond.kind))?;
        let pc = AmgOperator::new(h, precond.mode);
        let (x, rep) = if precond.mode.is_fixed() {
            cg(op, &pc, rhs, rel_tol, INNER_MAX_ITER)?
        } else {
            flexible_cg(op, &pc, rhs, rel_tol, INNER_MAX_ITER)?
        };
        self.bump(|s| {
            s.cg_iterations += rep.iterations;
            s.velocity_solves += 1;
        });
        self.record(stage, rel_tol, &rep);
        Ok((x, rep))
    }

    /// `y = B A_λ⁻¹ Bᵀ p`, projected, with the inner velocity solve
    /// preconditioned by `(Ã_3)_2Vc`.
    pub fn apply_schur(&self, p: &[f64], inner_tol: f64) -> Result<Vec<f64>> {
        self.check_pressure(p)?;
        let w = self.bt.spmv(p)?;
        let (u, rep) = self.solve_velocity(&w, VelocityPrecond::A3_2VC, inner_tol)?;
        if !rep.converged {
            return Err(Error::InnerSolve {
                stage: "schur velocity solve",
                residual: rep.final_residual,
            });
        }
        let mut y = self.b.spmv(&u)?;
        self.project(&mut y);
        Ok(y)
    }

    /// `S_λ` as an operator.
    pub fn schur_operator(&self, inner_tol: f64) -> impl LinearOperator + '_ {
        FnOperator::new(self.n_pressure(), move |x: &[f64], y: &mut [f64]| {
            y.copy_from_slice(&self.apply_schur(x, inner_tol)?);
            Ok(())
        })
        .symmetric()
        .variable()
    }

    /// GMRES on `B·mass⁻¹·Bᵀ X = rhs` preconditioned by `(M_Q + L_Q)_th⁻¹`.
    pub fn solve_bmbt(&self, rhs: &[f64], mass: BmbtMass, rel_tol: f64) -> Result<(Vec<f64>, KrylovReport)> {
        self.check_pressure(rhs)?;
        let mut b = rhs.to_vec();
        self.project(&mut b);
        let shifted = self.hierarchy(HierarchyKind::ShiftedPressureLaplacian)?;
        if mass != BmbtMass::Lumped {
            self.hierarchy(HierarchyKind::MassVelocity)?;
        }
        let op = FnOperator::new(self.n_pressure(), |x: &[f64], y: &mut [f64]| {
            let w = self.bt.spmv(x)?;
            let z = match mass {
                BmbtMass::ConsistentTh => self.amg_solve(HierarchyKind::MassVelocity, AmgMode::TH, &w)?,
                BmbtMass::Consistent2Vc => self.amg_solve(HierarchyKind::MassVelocity, AmgMode::TWO_VC, &w)?,
                BmbtMass::Lumped => w.iter().zip(&self.lumped_v).map(|(a, d)| a / d).collect(),
            };
            self.b.apply_into(&z, y);
            self.project(y);
            Ok(())
        })
        .symmetric();
        let pc = FnOperator::new(self.n_pressure(), |x: &[f64], y: &mut [f64]| {
            y.copy_from_slice(&shifted.apply(x, AmgMode::TH)?.x);
            self.project(y);
            Ok(())
        })
        .variable();
        let (x, rep) = gmres(&op, &pc, &b, rel_tol, DEFAULT_RESTART, INNER_MAX_ITER)?;
        self.bump(|s| s.gmres_iterations += rep.iterations);
        self.record("bmbt", rel_tol, &rep);
        Ok((x, rep))
    }

    /// The two terms of a Schur preconditioner applied to `r`: the scaled
    /// pressure-mass term and the `τ⁻¹X⁻¹` term, each projected.
    pub fn schur_precond_terms(&self, kind: SchurPrecondKind, r: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_pressure(r)?;
        let a = match kind {
            SchurPrecondKind::C { a, .. } | SchurPrecondKind::CLambda { a } | SchurPrecondKind::CDelta { a, .. } => a,
        };
        let mut mass = self.amg_solve(HierarchyKind::MassPressure, a, r)?;
        scale(self.mu * (1.0 + self.lambda), &mut mass);
        self.project(&mut mass);
        let mut second = match kind {
            SchurPrecondKind::C { b, .. } => {
                let m = if b.is_fixed() {
                    BmbtMass::Consistent2Vc
                } else {
                    BmbtMass::ConsistentTh
                };
                self.bmbt_term(r, m)?
            }
            SchurPrecondKind::CLambda { .. } => self.bmbt_term(r, BmbtMass::Lumped)?,
            SchurPrecondKind::CDelta { b, .. } => {
                // L_Q is a pure Neumann operator: solve on the mean-zero complement
                let mut rhs = r.to_vec();
                remove_mean(&mut rhs);
                let mut x = self.amg_solve(HierarchyKind::PressureLaplacian, b, &rhs)?;
                remove_mean(&mut x);
                x
            }
        };
        scale(1.0 / self.tau, &mut second);
        self.project(&mut second);
        Ok((mass, second))
    }

    fn bmbt_term(&self, r: &[f64], mass: BmbtMass) -> Result<Vec<f64>> {
        let (x, rep) = self.solve_bmbt(r, mass, INNER_TOL)?;
        if !rep.converged {
            return Err(Error::InnerSolve {
                stage: "B·M⁻¹·Bᵀ solve",
                residual: rep.final_residual,
            });
        }
        Ok(x)
    }

    /// `C r`: the sum of [`schur_precond_terms`](Self::schur_precond_terms).
    pub fn apply_schur_precond(&self, kind: SchurPrecondKind, r: &[f64]) -> Result<Vec<f64>> {
        let (mut y, second) = self.schur_precond_terms(kind, r)?;
        axpy(1.0, &second, &mut y);
        Ok(y)
    }

    /// A Schur preconditioner as an operator. Flagged variable since every
    /// variant but `C_Δ(2Vc, 2Vc)` hides an inner threshold solve.
    pub fn schur_precond_operator(&self, kind: SchurPrecondKind) -> impl LinearOperator + '_ {
        FnOperator::new(self.n_pressure(), move |x: &[f64], y: &mut [f64]| {
            y.copy_from_slice(&self.apply_schur_precond(kind, x)?);
            Ok(())
        })
        .variable()
    }

    /// `Ã_{λ,kind}` assembled.
    pub fn velocity_precond_matrix(&self, kind: VelocityPrecondKind) -> crate::sparse::SparseMatrix {
        self.hierarchy_matrix(HierarchyKind::Velocity(kind))
    }

    fn check_velocity(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_velocity() {
            return Err(Error::DimensionMismatch {
                expected: self.n_velocity(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    fn check_pressure(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_pressure() {
            return Err(Error::DimensionMismatch {
                expected: self.n_pressure(),
                actual: v.len(),
            });
        }
        Ok(())
    }
}
