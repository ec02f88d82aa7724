//! Taylor–Hood discretization: quadrature, Lagrange bases, assembly of every
//! mass/stiffness/divergence matrix, Dirichlet data, interpolation and error
//! norms.

mod assembly;
mod basis;
mod boundary;
mod fields;
mod quadrature;
mod space;

pub(crate) use assembly::check_tau_mu;
pub use assembly::{
    assemble, assemble_velocity_system, lump_velocity_mass, lumped_mass, reference_abs_integrals, MatrixKind,
};
pub use basis::{lagrange_barycentric_gradients, lagrange_values, CellGeometry, Tabulation};
pub use boundary::{apply_dirichlet, BoundaryCondition};
pub use fields::{
    assemble_load, interpolate, interpolate_velocity, relative_errors, relative_errors_pressure, relative_l2_error,
    relative_l2_error_velocity, RelativeErrors,
};
pub use quadrature::{gauss_legendre, TriangleRule};
pub use space::{ElementPair, MixedSpace};
