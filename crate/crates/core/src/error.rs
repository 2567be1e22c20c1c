use thiserror::Error;

/// Errors surfaced by the numerics and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("inadmissible parameters: {0}")]
    InadmissibleParams(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("Nehari projection undefined: {0}")]
    ProjectionUndefined(String),

    #[error("zero field rejected: {0}")]
    ZeroField(&'static str),

    #[error("mass-frequency inversion ambiguous: {0}")]
    BranchAmbiguity(String),

    #[error("bracket not found: {0}")]
    BracketNotFound(String),

    #[error("step failure: {0}")]
    StepFailure(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable kind tag used in JSON error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InadmissibleParams(_) => "inadmissible_params",
            Error::Grid(_) => "grid",
            Error::ProjectionUndefined(_) => "projection_undefined",
            Error::ZeroField(_) => "zero_field",
            Error::BranchAmbiguity(_) => "branch_ambiguity",
            Error::BracketNotFound(_) => "bracket_not_found",
            Error::StepFailure(_) => "step_failure",
            Error::Consistency(_) => "consistency",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
