//! Preconditioned Krylov solvers for the generalized Stokes problem
//!
//! ```text
//!   A U - Bᵀ P = F,    B U = G,    A = M_V / τ + μ E_V
//! ```
//!
//! discretized with continuous Taylor–Hood elements (P2/P1, P3/P2) on
//! triangulations of the unit square.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: structured-but-jittered triangulations, red refinement and
//!   Lagrange node layouts;
//! - [`sparse`]: CSR matrices, vector kernels and a small dense toolkit used
//!   as a brute-force oracle;
//! - [`fem`]: assembly of every mass/stiffness/divergence matrix, Dirichlet
//!   lifting, interpolation and error norms;
//! - [`multigrid`]: smoothed-aggregation AMG with Chebyshev smoothing, usable
//!   either to a residual threshold or as a fixed number of V-cycles;
//! - [`krylov`]: preconditioned CG (plain and flexible) and restarted,
//!   right-preconditioned (flexible) GMRES;
//! - [`stokes`]: the augmented-Lagrangian velocity operator, the pressure
//!   Schur complement and its Cahouet–Chabard style preconditioners, the
//!   Schur-complement and fully coupled solvers, and a pressure-correction
//!   baseline.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature; the only thing `std` adds is wall-clock timing of solves.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::type_complexity
)]

extern crate alloc;

mod clock;
mod error;
pub mod fem;
pub mod krylov;
pub mod manufactured;
pub mod mesh;
pub mod multigrid;
pub mod sparse;
pub mod stokes;

pub use error::{Error, Result};
