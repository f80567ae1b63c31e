use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("level {level} exceeds the configured cap {cap}")]
    LevelCap { level: usize, cap: usize },
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("point ({0}, {1}) lies outside the reference triangle")]
    OutsideReference(f64, f64),
    #[error("no symmetric triangle rule with exactness {0}")]
    UnsupportedQuadrature(usize),
    #[error("null space construction failed: {0}")]
    Nullspace(String),
    #[error("coefficient {name} is not positive: {value:e} at ({x}, {y})")]
    NonPositiveCoefficient {
        name: String,
        value: f64,
        x: f64,
        y: f64,
    },
    #[error("cannot parse expression at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("eigensolver did not converge: {0}")]
    Convergence(String),
    #[error("dimension {n} exceeds the dense cap {cap}")]
    DenseCap { n: usize, cap: usize },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the request rather than by a numerical failure.
    pub fn is_spec_error(&self) -> bool {
        matches!(
            self,
            Error::UnknownDomain(_)
                | Error::LevelCap { .. }
                | Error::UnsupportedQuadrature(_)
                | Error::NonPositiveCoefficient { .. }
                | Error::Parse { .. }
                | Error::DenseCap { .. }
                | Error::InvalidSpec(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
