use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),

    #[error("non-finite sample {value} at quadrature point {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("exponent not in C+: value {value} at node {node} is not > 1")]
    ExponentOutOfRange { node: usize, value: f64 },

    #[error("invalid weight field: {0}")]
    InvalidWeight(String),

    #[error("cannot evaluate expression `{expr}`: {message}")]
    Expression { expr: String, message: String },

    #[error("norm root-finding did not converge: {0}")]
    RootFinding(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("lambda below threshold: {0}")]
    BelowThreshold(String),

    #[error("singular multiplier system: {0}")]
    Singular(String),

    #[error("mountain geometry violated: {0}")]
    Geometry(String),

    #[error("mountain-pass path collapsed: {0}")]
    PathCollapse(String),

    #[error("non-finite energy: {0}")]
    NonFiniteEnergy(String),

    #[error("malformed field dump: {0}")]
    FieldDump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
