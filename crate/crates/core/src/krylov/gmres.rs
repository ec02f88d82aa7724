use alloc::vec;
use alloc::vec::Vec;

use super::{check_dims, check_tol, true_residual, KrylovReport, LinearOperator};
use crate::clock::Stopwatch;
use crate::sparse::vector::{axpy, dot, norm};
use crate::{Error, Result};

/// Restarted, right-preconditioned GMRES with modified Gram–Schmidt and
/// Givens rotations.
///
/// The Arnoldi residual of right-preconditioned GMRES is the residual of the
/// original system, so the history is directly comparable to `rel_tol`.
/// When `precond` is flagged variable the preconditioned directions are kept
/// and the flexible variant results.
pub fn gmres(
    op: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    b: &[f64],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<f64>, KrylovReport)> {
    check_dims(op, precond, b)?;
    check_tol(rel_tol)?;
    if restart == 0 {
        return Err(Error::InvalidParameter {
            name: "restart",
            value: 0.0,
        });
    }
    let clock = Stopwatch::start();
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], KrylovReport::trivial()));
    }
    let flexible = precond.is_variable();
    let m = restart;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut beta = bnorm;
    let mut history = vec![1.0];
    let mut iterations = 0;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut directions: Vec<Vec<f64>> = Vec::new();
    // column j of the Hessenberg matrix, already rotated
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
    let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
    let mut g = vec![0.0; m + 1];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];

    loop {
        if beta / bnorm <= rel_tol || iterations >= max_iter {
            break;
        }
        basis.clear();
        directions.clear();
        h.clear();
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut breakdown = false;
        for j in 0..m {
            if iterations >= max_iter {
                break;
            }
            precond.apply(&basis[j], &mut z)?;
            op.apply(&z, &mut w)?;
            if flexible {
                directions.push(z.clone());
            }
            let mut col = vec![0.0; j + 2];
            let wnorm0 = norm(&w);
            for (i, v) in basis.iter().enumerate() {
                col[i] = dot(&w, v);
                axpy(-col[i], v, &mut w);
            }
            let hnext = norm(&w);
            col[j + 1] = hnext;
            for i in 0..j {
                let (a, c) = (col[i], col[i + 1]);
                col[i] = cs[i] * a + sn[i] * c;
                col[i + 1] = -sn[i] * a + cs[i] * c;
            }
            let d = libm::hypot(col[j], col[j + 1]);
            if d == 0.0 {
                // the operator annihilated a Krylov direction
                breakdown = true;
                break;
            }
            cs[j] = col[j] / d;
            sn[j] = col[j + 1] / d;
            col[j] = d;
            col[j + 1] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            h.push(col);
            iterations += 1;
            let est = g[j + 1].abs() / bnorm;
            history.push(est);
            if hnext <= 1e-14 * wnorm0 {
                breakdown = true;
                break;
            }
            if est <= rel_tol {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        let k = h.len();
        if k == 0 {
            break;
        }
        // back substitution with the rotated triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (jj, yj) in y.iter().enumerate().skip(i + 1) {
                s -= h[jj][i] * yj;
            }
            y[i] = s / h[i][i];
        }
        if flexible {
            for (yi, zi) in y.iter().zip(&directions) {
                axpy(*yi, zi, &mut x);
            }
        } else {
            let mut u = vec![0.0; n];
            for (yi, vi) in y.iter().zip(&basis) {
                axpy(*yi, vi, &mut u);
            }
            precond.apply(&u, &mut z)?;
            axpy(1.0, &z, &mut x);
        }
        let previous = beta;
        true_residual(op, b, &x, &mut r)?;
        beta = norm(&r);
        *history.last_mut().unwrap() = beta / bnorm;
        if breakdown && beta / bnorm > rel_tol && beta >= previous {
            // no progress possible from this subspace
            break;
        }
    }
    let final_residual = beta / bnorm;
    Ok((
        x,
        KrylovReport {
            iterations,
            relative_residuals: history,
            converged: final_residual <= rel_tol,
            wall_time: clock.seconds(),
            final_residual,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{FnOperator, Identity};
    use crate::sparse::DenseMatrix;

    #[test]
    fn rotation_in_two_steps() {
        let op = DenseMatrix::from_row_major(2, 2, vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        let (x, rep) = gmres(&op, &Identity(2), &[1.0, 0.0], 1e-12, 200, 10).unwrap();
        assert!(rep.converged && rep.iterations <= 2);
        assert!(x[0].abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14, "{x:?}");
    }

    #[test]
    fn exact_inverse_preconditioner_takes_one_iteration() {
        let a = DenseMatrix::from_row_major(3, 3, vec![4.0, 1.0, 0.0, -2.0, 5.0, 1.0, 0.5, 0.0, 3.0]).unwrap();
        let inv = a.inverse().unwrap();
        let (_, rep) = gmres(&a, &inv, &[1.0, 2.0, 3.0], 1e-12, 200, 10).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
    }

    #[test]
    fn restarts_still_converge() {
        let n = 30;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            a.set(i, i, 3.0 + i as f64 * 0.1);
            if i + 1 < n {
                a.set(i, i + 1, 1.0);
            }
            if i >= 2 {
                a.set(i, i - 2, -0.7);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x, rep) = gmres(&a, &Identity(n), &b, 1e-11, 5, 500).unwrap();
        assert!(rep.converged);
        let ax = a.matvec(&x);
        let r: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&r) / norm(&b) <= 1e-11);
        assert_eq!(rep.relative_residuals.len(), rep.iterations + 1);
    }

    #[test]
    fn variable_preconditioner_uses_flexible_form() {
        use core::cell::Cell;
        let a = DenseMatrix::from_row_major(3, 3, vec![2.0, 1.0, 0.0, 0.0, 3.0, 1.0, 1.0, 0.0, 4.0]).unwrap();
        let calls = Cell::new(0usize);
        // a preconditioner that changes between applications
        let pc = FnOperator::new(3, |x: &[f64], y: &mut [f64]| {
            calls.set(calls.get() + 1);
            let s = 0.3 + 0.1 * (calls.get() % 3) as f64;
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = s * xi;
            }
            Ok(())
        })
        .variable();
        let b = [1.0, -1.0, 2.0];
        let (x, rep) = gmres(&a, &pc, &b, 1e-12, 200, 20).unwrap();
        assert!(rep.converged);
        let ax = a.matvec(&x);
        for (p, q) in ax.iter().zip(&b) {
            assert!((p - q).abs() < 1e-11);
        }
    }

    #[test]
    fn max_iter_reports_failure() {
        let a = DenseMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0]);
        let (_, rep) = gmres(&a, &Identity(4), &[1.0; 4], 1e-12, 200, 2).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn zero_rhs_and_bad_restart() {
        let (x, rep) = gmres(&Identity(2), &Identity(2), &[0.0, 0.0], 1e-10, 10, 10).unwrap();
        assert_eq!((x, rep.iterations, rep.converged), (vec![0.0; 2], 0, true));
        assert!(gmres(&Identity(2), &Identity(2), &[1.0, 0.0], 1e-10, 0, 10).is_err());
    }
}
