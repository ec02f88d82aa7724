//! Sparse and dense linear algebra.
//!
//! [`SparseMatrix`] is a plain CSR container; every assembled operator in the
//! crate lives in one. [`DenseMatrix`] and its factorizations exist to check
//! the sparse/iterative machinery on small problems and to solve the coarsest
//! multigrid level.

mod csr;
mod dense;
pub mod vector;

pub use csr::{SparseMatrix, TripletBuilder};
pub use dense::{generalized_eigs_sym, DenseMatrix, LuFactors, DENSE_ORACLE_LIMIT};

/// Dense coefficient vector.
pub type Vector = alloc::vec::Vec<f64>;
