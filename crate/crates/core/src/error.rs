use alloc::string::String;

/// Errors raised by the algebra, graph and linear-algebra layers.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("derivative order exceeds the ring maximum {max_order}")]
    MaxOrderExceeded { max_order: usize },
    #[error("coordinate {coord} out of range for dimension {dim}")]
    CoordinateOutOfRange { coord: usize, dim: usize },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
    #[error("invalid graph structure: {0}")]
    Structure(String),
    #[error("operation requires dimension {expected}, graph has dimension {found}")]
    Dimension { expected: usize, found: usize },
    #[error("length mismatch: {0} coefficients for {1} items")]
    LengthMismatch(usize, usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("monomial not present in the index: {0}")]
    UnindexedMonomial(String),
    #[error("mixed multivector degrees in one index")]
    MixedDegrees,
    #[error("subspace is not contained in the ambient space")]
    NotASubspace,
    #[error("arity mismatch: graph has {vertices} vertices, {args} arguments given")]
    Arity { vertices: usize, args: usize },
    #[error("bivector is not Poisson: [[P,P]] != 0")]
    NotPoisson,
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("unknown fixture: {0}")]
    UnknownFixture(String),
}
