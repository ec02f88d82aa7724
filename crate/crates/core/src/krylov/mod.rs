//! Krylov solvers over abstract operators.
//!
//! Every solver starts from `x = 0`, records the relative residual of each
//! iteration and declares convergence only on the true residual
//! `‖b − A x‖ / ‖b‖` recomputed at exit.

mod cg;
mod gmres;

use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;

pub use cg::{cg, flexible_cg};
pub use gmres::gmres;

use crate::multigrid::{AmgHierarchy, AmgMode};
use crate::sparse::{DenseMatrix, SparseMatrix};
use crate::{Error, Result};

/// Restart length used throughout.
pub const DEFAULT_RESTART: usize = 200;

/// `y = Op(x)` on vectors of length [`dim`](LinearOperator::dim).
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Overwrites `y`; fails only when an inner solve inside the operator does.
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()>;

    fn is_symmetric(&self) -> bool {
        false
    }

    /// True when the map is not a fixed linear operator (inner iterative
    /// solves to a threshold). GMRES switches to its flexible form and CG
    /// refuses such a preconditioner.
    fn is_variable(&self) -> bool {
        false
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (**self).apply(x, y)
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
    fn is_variable(&self) -> bool {
        (**self).is_variable()
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_into(x, y);
        Ok(())
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(&self.matvec(x));
        Ok(())
    }
}

/// The identity, i.e. no preconditioning.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(x);
        Ok(())
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// An AMG hierarchy applied in a given mode, counting V-cycles.
#[derive(Debug)]
pub struct AmgOperator<'a> {
    pub hierarchy: &'a AmgHierarchy,
    pub mode: AmgMode,
    cycles: Cell<usize>,
}

impl<'a> AmgOperator<'a> {
    pub fn new(hierarchy: &'a AmgHierarchy, mode: AmgMode) -> Self {
        Self {
            hierarchy,
            mode,
            cycles: Cell::new(0),
        }
    }

    /// V-cycles spent since construction.
    pub fn cycles(&self) -> usize {
        self.cycles.get()
    }
}

impl LinearOperator for AmgOperator<'_> {
    fn dim(&self) -> usize {
        self.hierarchy.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        match self.mode {
            AmgMode::FixedVCycles(k) if k > 0 => {
                if x.len() != self.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim(),
                        actual: x.len(),
                    });
                }
                self.hierarchy.fixed_cycles_into(x, y, k);
                self.cycles.set(self.cycles.get() + k);
            }
            mode => {
                let sol = self.hierarchy.apply(x, mode)?;
                y.copy_from_slice(&sol.x);
                self.cycles.set(self.cycles.get() + sol.cycles);
            }
        }
        Ok(())
    }
    fn is_symmetric(&self) -> bool {
        self.mode.is_fixed()
    }
    fn is_variable(&self) -> bool {
        !self.mode.is_fixed()
    }
}

/// Operator given by a closure.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
    symmetric: bool,
    variable: bool,
}

impl<F> FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            symmetric: false,
            variable: false,
        }
    }

    pub fn symmetric(mut self) -> Self {
        self.symmetric = true;
        self
    }

    pub fn variable(mut self) -> Self {
        self.variable = true;
        self
    }
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (self.f)(x, y)
    }
    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
    fn is_variable(&self) -> bool {
        self.variable
    }
}

/// Outcome of one Krylov solve.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// `‖r_k‖ / ‖b‖` for `k = 0..=iterations`; the first entry is 1.
    pub relative_residuals: Vec<f64>,
    pub converged: bool,
    /// Seconds; zero without the `std` feature.
    pub wall_time: f64,
    /// True relative residual recomputed at exit.
    pub final_residual: f64,
}

impl KrylovReport {
    fn trivial() -> Self {
        Self {
            iterations: 0,
            relative_residuals: vec![1.0],
            converged: true,
            wall_time: 0.0,
            final_residual: 0.0,
        }
    }
}

fn check_dims(op: &dyn LinearOperator, pc: &dyn LinearOperator, b: &[f64]) -> Result<()> {
    let n = op.dim();
    for m in [pc.dim(), b.len()] {
        if m != n {
            return Err(Error::DimensionMismatch { expected: n, actual: m });
        }
    }
    Ok(())
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "rel_tol",
            value: rel_tol,
        })
    }
}

/// `r ← b − op(x)`.
fn true_residual(op: &dyn LinearOperator, b: &[f64], x: &[f64], r: &mut [f64]) -> Result<()> {
    op.apply(x, r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    Ok(())
}
