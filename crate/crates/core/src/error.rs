use alloc::string::String;

/// Errors produced anywhere in the solver stack.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dense oracle limited to {limit} rows, got {rows}")]
    TooLarge { rows: usize, limit: usize },
    #[error("eigenvalue iteration failed to converge")]
    EigenNoConvergence,

    #[error("a mesh needs at least 2 subdivisions per side, got {0}")]
    TooFewSubdivisions(usize),
    #[error("perturbation {0} outside [0, 0.3]")]
    BadPerturbation(f64),
    #[error("triangle {triangle} has non-positive area {area:e}")]
    InvertedTriangle { triangle: usize, area: f64 },
    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("exact field has zero norm")]
    ZeroNorm,

    #[error("AMG did not reach tolerance after {cycles} cycles (relative residual {residual:e})")]
    AmgNoConvergence { cycles: usize, residual: f64 },
    #[error("CG breakdown: operator is not positive definite (pᵀAp = {curvature:e})")]
    CgBreakdown { curvature: f64 },
    #[error("CG requires a fixed linear preconditioner")]
    VariablePreconditioner,
    #[error("{stage}: inner solve did not converge (relative residual {residual:e})")]
    InnerSolve { stage: &'static str, residual: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
