use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed matrix: asymmetry {asymmetry:e} exceeds tolerance")]
    MalformedMatrix { asymmetry: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inconsistent covariance: symplectic discriminant {discriminant:e} is negative")]
    InconsistentCovariance { discriminant: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("stability error: {0}")]
    Stability(String),

    #[error("lattice mismatch between operands")]
    LatticeMismatch,

    #[error("degenerate mode: causal pairing {pairing:e} is below tolerance")]
    DegenerateMode { pairing: f64 },

    #[error("causal-geometry error: {0}")]
    CausalGeometry(String),

    #[error("infrared/tachyonic spatial operator: smallest eigenvalue {eigenvalue:e} is not positive (use m > 0 or a confining potential)")]
    Infrared { eigenvalue: f64 },

    #[error(
        "uncertainty relation violated (min eigenvalue {min_eigenvalue:e}); refine the lattice"
    )]
    UncertaintyViolation { min_eigenvalue: f64 },

    #[error("unsupported expansion: {0}")]
    UnsupportedExpansion(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
