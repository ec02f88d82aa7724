use alloc::vec;
use alloc::vec::Vec;

use super::{check_dims, check_tol, true_residual, KrylovReport, LinearOperator};
use crate::clock::Stopwatch;
use crate::sparse::vector::{axpy, dot, norm};
use crate::{Error, Result};

/// Preconditioned conjugate gradients.
///
/// `op` must be symmetric positive definite on the subspace the iterates
/// live in and `precond` a fixed symmetric positive definite operator;
/// a preconditioner flagged variable is rejected.
pub fn cg(
    op: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, KrylovReport)> {
    if precond.is_variable() {
        return Err(Error::VariablePreconditioner);
    }
    run(op, precond, b, rel_tol, max_iter, false)
}

/// CG with the Polak–Ribière choice of `β`, which tolerates a preconditioner
/// that changes from one application to the next (an inner solve to a
/// threshold). Coincides with [`cg`] in exact arithmetic for a fixed one.
pub fn flexible_cg(
    op: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, KrylovReport)> {
    run(op, precond, b, rel_tol, max_iter, true)
}

fn run(
    op: &dyn LinearOperator,
    pc: &dyn LinearOperator,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
    flexible: bool,
) -> Result<(Vec<f64>, KrylovReport)> {
    check_dims(op, pc, b)?;
    check_tol(rel_tol)?;
    let clock = Stopwatch::start();
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], KrylovReport::trivial()));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut z_old = vec![0.0; n];
    let mut q = vec![0.0; n];
    pc.apply(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = vec![1.0];
    let mut rel = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        op.apply(&p, &mut q)?;
        let curvature = dot(&p, &q);
        if !(curvature > 0.0) {
            return Err(Error::CgBreakdown { curvature });
        }
        let alpha = rz / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        iterations += 1;
        rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= rel_tol {
            // confirm on the true residual; on a miss continue from it
            true_residual(op, b, &x, &mut r)?;
            rel = norm(&r) / bnorm;
            *history.last_mut().unwrap() = rel;
            if rel <= rel_tol {
                converged = true;
                break;
            }
            pc.apply(&r, &mut z)?;
            rz = dot(&r, &z);
            p.copy_from_slice(&z);
            continue;
        }
        if flexible {
            core::mem::swap(&mut z, &mut z_old);
        }
        pc.apply(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        let beta = if flexible {
            (rz_new - dot(&r, &z_old)) / rz
        } else {
            rz_new / rz
        };
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if !converged {
        true_residual(op, b, &x, &mut r)?;
        rel = norm(&r) / bnorm;
        converged = rel <= rel_tol;
    }
    Ok((
        x,
        KrylovReport {
            iterations,
            relative_residuals: history,
            converged,
            wall_time: clock.seconds(),
            final_residual: rel,
        },
    ))
}
