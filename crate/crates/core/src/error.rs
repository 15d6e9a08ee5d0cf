use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric or structural parameter is outside its allowed domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The input references ids that do not exist, or is otherwise malformed
    /// (as opposed to well-formed but infeasible).
    #[error("structural error: {0}")]
    Structural(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("instance too large for enumeration: {n} nodes (max {max})")]
    SizeGuard { n: usize, max: usize },

    #[error("efficiency undefined for zero total energy")]
    UndefinedEfficiency,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
