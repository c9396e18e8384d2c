use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("intervals overlap or touch: ({0}, {1}) and ({2}, {3})")]
    Overlap(f64, f64, f64, f64),
    #[error("degenerate interval ({0}, {1})")]
    Degenerate(f64, f64),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("no boundary crossing found inside the bounding box")]
    NoBoundary,
    #[error("gradient of the level-set function nearly vanishes at ({0}, {1})")]
    SingularGradient(f64, f64),
    #[error("coincident points in kernel evaluation")]
    CoincidentPoints,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("estimated error {estimate:e} exceeds requested tolerance {tol:e}")]
    Tolerance { estimate: f64, tol: f64 },
    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("iteration did not converge: {0}")]
    Convergence(String),
    #[error("mesh is not symmetric under x -> -x")]
    AsymmetricMesh,
    #[error("exponent p = {p} is outside the subcritical range (upper bound {bound})")]
    Supercritical { p: f64, bound: f64 },
    #[error("fit window holds {0} nodes, at least 4 required")]
    Window(usize),
    #[error("bump support must stay {margin} away from the boundary")]
    Support { margin: f64 },
    #[error("perturbed domain collides: {0}")]
    DomainCollision(String),
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
