use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A coordinate left the chart `z >= 1/2` (or another stated domain).
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument violated a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A geometric consistency check failed (angle sums, degenerate input, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A mesh failed validation (non-manifold edge, degenerate triangle, bad offsets).
    #[error("mesh error: {0}")]
    Mesh(String),

    /// A map was asked for a quantity that needs a different conjugacy class.
    #[error("classification error: {0}")]
    Classification(String),

    /// The `c = 0` branch of a parabolic triple; all generators fix infinity.
    #[error("degenerate branch: {0}")]
    DegenerateBranch(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
