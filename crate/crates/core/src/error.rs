use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// An analysis failed while evaluating a design; never reported as a feasible value.
    #[error("evaluation failed in {stage}: {source}")]
    Evaluation {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        match self {
            e @ Error::Evaluation { .. } => e,
            e => Error::Evaluation {
                stage: stage.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// Short machine-readable category, used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::Json(_) => "config",
            Error::Io(_) => "io",
            Error::InvalidInput(_) => "input",
            Error::Singular(_) | Error::NonConvergence(_) | Error::Evaluation { .. } => "analysis",
        }
    }
}
