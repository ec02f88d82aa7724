//! Smoothed-aggregation algebraic multigrid.
//!
//! A hierarchy is applied in one of two modes: iterated V-cycles until a
//! relative residual threshold ([`AmgMode::ToThreshold`], a nonlinear map of
//! the right-hand side) or a fixed number of V-cycles from a zero guess
//! ([`AmgMode::FixedVCycles`], a fixed symmetric linear operator that can
//! precondition CG).

mod aggregation;

use alloc::vec;
use alloc::vec::Vec;

use aggregation::{aggregate, tentative_prolongator, StrengthGraph};

use crate::sparse::vector::{axpy, dot, norm};
use crate::sparse::{DenseMatrix, SparseMatrix};
use crate::{Error, Result};

/// How a hierarchy is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmgMode {
    /// V-cycles until `‖b − Mx‖ ≤ rel_tol ‖b‖`.
    ToThreshold(f64),
    /// Exactly this many V-cycles from `x = 0`.
    FixedVCycles(usize),
}

impl AmgMode {
    /// The `th` mode of the solver tables.
    pub const TH: AmgMode = AmgMode::ToThreshold(1e-10);
    /// The `2Vc` mode of the solver tables.
    pub const TWO_VC: AmgMode = AmgMode::FixedVCycles(2);

    pub fn is_fixed(self) -> bool {
        matches!(self, AmgMode::FixedVCycles(_))
    }

    fn validate(self) -> Result<()> {
        match self {
            AmgMode::ToThreshold(t) if !(t > 0.0 && t < 1.0) => Err(Error::InvalidParameter {
                name: "rel_tol",
                value: t,
            }),
            AmgMode::FixedVCycles(0) => Err(Error::InvalidParameter {
                name: "cycles",
                value: 0.0,
            }),
            _ => Ok(()),
        }
    }
}

/// Setup parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmgOptions {
    pub strong_threshold: f64,
    /// 1 for scalar fields, 2 for node-major interleaved vector fields.
    pub block_size: usize,
    pub max_levels: usize,
    pub coarse_size_limit: usize,
    pub chebyshev_degree: usize,
    /// The smoother targets `[upper / ratio, upper]` of the spectrum of `D⁻¹A`.
    pub chebyshev_ratio: f64,
    pub power_iterations: usize,
    /// Cycle cap for [`AmgMode::ToThreshold`].
    pub max_cycles: usize,
}

impl Default for AmgOptions {
    fn default() -> Self {
        Self {
            strong_threshold: 0.1,
            block_size: 1,
            max_levels: 25,
            coarse_size_limit: 64,
            chebyshev_degree: 3,
            chebyshev_ratio: 30.0,
            power_iterations: 20,
            max_cycles: 200,
        }
    }
}

/// Largest last level that is factorized densely.
const DIRECT_SOLVE_LIMIT: usize = 500;

/// Jacobi-preconditioned Chebyshev data for one operator.
#[derive(Debug, Clone)]
struct Smoother {
    inv_diag: Vec<f64>,
    /// Upper end of the Chebyshev interval for `D⁻¹A`.
    upper: f64,
    /// Estimated lower end; `None` targets `[upper / ratio, upper]`.
    lower: Option<f64>,
}

impl Smoother {
    fn new(a: &SparseMatrix, power_iterations: usize) -> Result<Self> {
        let inv_diag = inverse_diagonal(a)?;
        let upper = chebyshev_upper_bound(a, &inv_diag, power_iterations);
        Ok(Self {
            inv_diag,
            upper,
            lower: None,
        })
    }

    /// Smoother that targets the whole estimated spectrum, for a last level
    /// that is solved by smoothing alone.
    fn full_spectrum(a: &SparseMatrix, power_iterations: usize, ratio: f64) -> Result<Self> {
        let mut sm = Self::new(a, power_iterations)?;
        let lowest = chebyshev_lower_estimate(a, &sm.inv_diag, sm.upper, power_iterations);
        sm.lower = Some((0.9 * lowest).max(sm.upper / ratio));
        Ok(sm)
    }
}

#[derive(Debug, Clone)]
struct Level {
    a: SparseMatrix,
    smoother: Smoother,
    /// Prolongation to this level from the next coarser one.
    p: SparseMatrix,
    r: SparseMatrix,
}

/// Result of one hierarchy application.
#[derive(Debug, Clone, PartialEq)]
pub struct AmgSolution {
    pub x: Vec<f64>,
    pub cycles: usize,
    pub rel_residual: f64,
}

/// Multigrid hierarchy; level 0 holds the input matrix.
#[derive(Debug, Clone)]
pub struct AmgHierarchy {
    levels: Vec<Level>,
    coarse_a: SparseMatrix,
    coarse: CoarseSolve,
    options: AmgOptions,
}

/// Solve on the last level.
#[derive(Debug, Clone)]
enum CoarseSolve {
    /// Pseudoinverse; also covers singular coarse operators (pure Neumann).
    Direct(DenseMatrix),
    /// Coarsening stalled above the direct solve limit (an operator without
    /// strong couplings, such as a mass matrix); smoothing alone is used.
    Smooth(Smoother),
}

/// Builds a hierarchy with default options and the given strength threshold
/// and block size.
pub fn amg_setup(m: &SparseMatrix, strong_threshold: f64, block_size: usize) -> Result<AmgHierarchy> {
    AmgHierarchy::new(
        m,
        AmgOptions {
            strong_threshold,
            block_size,
            ..AmgOptions::default()
        },
    )
}

impl AmgHierarchy {
    pub fn new(m: &SparseMatrix, options: AmgOptions) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.n_rows(),
                cols: m.n_cols(),
            });
        }
        if !(options.strong_threshold > 0.0 && options.strong_threshold < 1.0) {
            return Err(Error::InvalidParameter {
                name: "strong_threshold",
                value: options.strong_threshold,
            });
        }
        let block = options.block_size;
        if !(block == 1 || block == 2) || !m.n_rows().is_multiple_of(block) {
            return Err(Error::InvalidParameter {
                name: "block_size",
                value: block as f64,
            });
        }
        let mut levels = Vec::new();
        let mut a = m.clone();
        while a.n_rows() > options.coarse_size_limit && levels.len() + 1 < options.max_levels {
            let graph = StrengthGraph::new(&a, options.strong_threshold, block);
            let (agg, n_agg) = aggregate(&graph);
            if n_agg * block >= a.n_rows() {
                break;
            }
            let smoother = Smoother::new(&a, options.power_iterations)?;
            let tentative = tentative_prolongator(&agg, n_agg, block);
            // P = (I − ω D⁻¹A) P_tent with ω = 4 / (3 ρ(D⁻¹A))
            let omega = 4.0 / (3.0 * smoother.upper / 1.1);
            let ap = a.matmul(&tentative).row_scaled(&smoother.inv_diag);
            let p = tentative.add(1.0, &ap, -omega);
            let r = p.transpose();
            let coarse = r.matmul(&a.matmul(&p));
            levels.push(Level { a, smoother, p, r });
            a = coarse;
        }
        let coarse = if a.n_rows() > DIRECT_SOLVE_LIMIT {
            CoarseSolve::Smooth(Smoother::full_spectrum(
                &a,
                options.power_iterations,
                options.chebyshev_ratio,
            )?)
        } else {
            let dense = a.to_dense();
            CoarseSolve::Direct(dense.add(0.5, &dense.transpose(), 0.5).pinv()?)
        };
        Ok(Self {
            levels,
            coarse_a: a,
            coarse,
            options,
        })
    }

    pub fn options(&self) -> &AmgOptions {
        &self.options
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.level_matrix(0).n_rows()
    }

    /// Operator matrix at `level` (0 = finest).
    pub fn level_matrix(&self, level: usize) -> &SparseMatrix {
        if level < self.levels.len() {
            &self.levels[level].a
        } else {
            &self.coarse_a
        }
    }

    /// `Σ nnz(level) / nnz(level 0)`.
    pub fn operator_complexity(&self) -> f64 {
        let total: usize = (0..self.n_levels()).map(|l| self.level_matrix(l).nnz()).sum();
        total as f64 / self.level_matrix(0).nnz().max(1) as f64
    }

    /// Solves `M x = rhs` in the given mode.
    pub fn apply(&self, rhs: &[f64], mode: AmgMode) -> Result<AmgSolution> {
        mode.validate()?;
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: rhs.len(),
            });
        }
        let a = self.level_matrix(0);
        let bnorm = norm(rhs);
        if bnorm == 0.0 {
            let cycles = match mode {
                AmgMode::FixedVCycles(k) => k,
                AmgMode::ToThreshold(_) => 0,
            };
            return Ok(AmgSolution {
                x: vec![0.0; n],
                cycles,
                rel_residual: 0.0,
            });
        }
        let mut x = vec![0.0; n];
        match mode {
            AmgMode::FixedVCycles(k) => {
                self.fixed_cycles_into(rhs, &mut x, k);
                let mut r = vec![0.0; n];
                a.residual_into(rhs, &x, &mut r);
                Ok(AmgSolution {
                    x,
                    cycles: k,
                    rel_residual: norm(&r) / bnorm,
                })
            }
            AmgMode::ToThreshold(tol) => {
                let mut r = rhs.to_vec();
                let mut e = vec![0.0; n];
                let mut rel = 1.0;
                for cycle in 1..=self.options.max_cycles {
                    e.iter_mut().for_each(|v| *v = 0.0);
                    self.vcycle(0, &r, &mut e, true);
                    axpy(1.0, &e, &mut x);
                    a.residual_into(rhs, &x, &mut r);
                    rel = norm(&r) / bnorm;
                    if rel <= tol {
                        return Ok(AmgSolution {
                            x,
                            cycles: cycle,
                            rel_residual: rel,
                        });
                    }
                    if !rel.is_finite() {
                        break;
                    }
                }
                Err(Error::AmgNoConvergence {
                    cycles: self.options.max_cycles,
                    residual: rel,
                })
            }
        }
    }

    /// `x ← k` V-cycles applied to `rhs` starting from zero; `x` is
    /// overwritten. This is the fixed linear operator of
    /// [`AmgMode::FixedVCycles`].
    pub fn fixed_cycles_into(&self, rhs: &[f64], x: &mut [f64], k: usize) {
        x.iter_mut().for_each(|v| *v = 0.0);
        if k == 0 {
            return;
        }
        self.vcycle(0, rhs, x, true);
        if k == 1 {
            return;
        }
        let a = self.level_matrix(0);
        let n = rhs.len();
        let mut r = vec![0.0; n];
        let mut e = vec![0.0; n];
        for _ in 1..k {
            a.residual_into(rhs, x, &mut r);
            e.iter_mut().for_each(|v| *v = 0.0);
            self.vcycle(0, &r, &mut e, true);
            axpy(1.0, &e, x);
        }
    }

    fn vcycle(&self, l: usize, b: &[f64], x: &mut [f64], x_is_zero: bool) {
        let (degree, ratio) = (self.options.chebyshev_degree, self.options.chebyshev_ratio);
        if l == self.levels.len() {
            match &self.coarse {
                CoarseSolve::Direct(inverse) => x.copy_from_slice(&inverse.matvec(b)),
                CoarseSolve::Smooth(sm) => {
                    chebyshev(&self.coarse_a, sm, b, x, degree, ratio, x_is_zero);
                    chebyshev(&self.coarse_a, sm, b, x, degree, ratio, false);
                }
            }
            return;
        }
        let level = &self.levels[l];
        chebyshev(&level.a, &level.smoother, b, x, degree, ratio, x_is_zero);
        let mut r = vec![0.0; b.len()];
        level.a.residual_into(b, x, &mut r);
        let mut rc = vec![0.0; level.r.n_rows()];
        level.r.apply_into(&r, &mut rc);
        let mut xc = vec![0.0; rc.len()];
        self.vcycle(l + 1, &rc, &mut xc, true);
        let mut corr = vec![0.0; b.len()];
        level.p.apply_into(&xc, &mut corr);
        axpy(1.0, &corr, x);
        chebyshev(&level.a, &level.smoother, b, x, degree, ratio, false);
    }
}

fn inverse_diagonal(a: &SparseMatrix) -> Result<Vec<f64>> {
    a.diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d > 0.0 && d.is_finite() {
                Ok(1.0 / d)
            } else {
                Err(Error::Singular { column: i, pivot: d })
            }
        })
        .collect()
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut state = 0x2545_F491_4F6C_DD1Du64;
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 + 0.5
        })
        .collect()
}

/// Smallest eigenvalue of `D⁻¹A` from power iterations on
/// `upper·I − D⁻¹A`. The estimate is approached from above.
fn chebyshev_lower_estimate(a: &SparseMatrix, inv_diag: &[f64], upper: f64, iterations: usize) -> f64 {
    let n = a.n_rows();
    let mut v = start_vector(n);
    let mut av = vec![0.0; n];
    let mut lowest = upper;
    for _ in 0..iterations.max(1) {
        a.apply_into(&v, &mut av);
        let num = dot(&v, &av);
        let den: f64 = v.iter().zip(inv_diag).map(|(x, d)| x * x / d).sum();
        if den > 0.0 {
            lowest = num / den;
        }
        for i in 0..n {
            v[i] = upper * v[i] - av[i] * inv_diag[i];
        }
        let s = norm(&v);
        if s == 0.0 || !s.is_finite() {
            break;
        }
        v.iter_mut().for_each(|x| *x /= s);
    }
    lowest
}

/// `min(1.1 · λ_est, Gershgorin)` for the spectrum of `D⁻¹A`, with `λ_est`
/// the D-inner-product Rayleigh quotient after a few power iterations from
/// a fixed pseudo-random start.
fn chebyshev_upper_bound(a: &SparseMatrix, inv_diag: &[f64], iterations: usize) -> f64 {
    let n = a.n_rows();
    let gershgorin = (0..n)
        .map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>() * inv_diag[i])
        .fold(0.0f64, f64::max);
    let mut v = start_vector(n);
    let mut av = vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        a.apply_into(&v, &mut av);
        // Rayleigh quotient vᵀAv / vᵀDv
        let num = dot(&v, &av);
        let den: f64 = v.iter().zip(inv_diag).map(|(x, d)| x * x / d).sum();
        if den > 0.0 {
            estimate = num / den;
        }
        for i in 0..n {
            v[i] = av[i] * inv_diag[i];
        }
        let s = norm(&v);
        if s == 0.0 || !s.is_finite() {
            break;
        }
        v.iter_mut().for_each(|x| *x /= s);
    }
    let est = 1.1 * estimate;
    if est > 0.0 && est < gershgorin {
        est
    } else {
        gershgorin
    }
}

/// Chebyshev smoothing with `D⁻¹A` over `[upper/ratio, upper]`.
fn chebyshev(a: &SparseMatrix, sm: &Smoother, b: &[f64], x: &mut [f64], degree: usize, ratio: f64, x_is_zero: bool) {
    let n = b.len();
    let upper = sm.upper;
    let lower = sm.lower.unwrap_or(upper / ratio);
    let theta = 0.5 * (upper + lower);
    let delta = 0.5 * (upper - lower);
    let sigma = theta / delta;
    let mut rho = 1.0 / sigma;
    let mut r = vec![0.0; n];
    if x_is_zero {
        r.copy_from_slice(b);
    } else {
        a.residual_into(b, x, &mut r);
    }
    for i in 0..n {
        r[i] *= sm.inv_diag[i];
    }
    let mut d: Vec<f64> = r.iter().map(|v| v / theta).collect();
    let mut ad = vec![0.0; n];
    for k in 1..=degree {
        axpy(1.0, &d, x);
        if k == degree {
            break;
        }
        a.apply_into(&d, &mut ad);
        for i in 0..n {
            r[i] -= sm.inv_diag[i] * ad[i];
        }
        let rho_new = 1.0 / (2.0 * sigma - rho);
        for i in 0..n {
            d[i] = rho_new * rho * d[i] + 2.0 * rho_new / delta * r[i];
        }
        rho = rho_new;
    }
}
