use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid genotype: {0}")]
    InvalidGenotype(String),
    #[error("arch id {id} out of range (space has {size} architectures)")]
    InvalidArchId { id: u64, size: u64 },
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("parameter count {params} is below the space minimum {p_min}")]
    InvalidCost { params: u64, p_min: u64 },
    #[error("invalid metric input: {0}")]
    InvalidMetricInput(String),
    #[error("alpha must be non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("no accuracy recorded for arch id {0}")]
    MissingEntry(u64),
    #[error("external evaluator did not answer within {0:?}")]
    EvaluatorTimeout(std::time::Duration),
    #[error("evaluator protocol violation: {0}")]
    ProtocolError(String),
    #[error("external evaluator exited: {0}")]
    EvaluatorDied(String),
    #[error("evaluator reported an error for request {id}: {message}")]
    EvaluatorReported { id: i64, message: String },
    #[error("run log is empty")]
    EmptyRun,
    #[error("need at least {needed} trials, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("refusing to enumerate the full space with an expensive evaluator")]
    RefusedExpensiveOracle,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}:{line}: {message}")]
    MalformedLog {
        path: String,
        line: usize,
        message: String,
    },
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        /// Records completed before the failing trial.
        partial_log: Vec<crate::harness::TrialRecord>,
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that originate in an evaluator (as opposed to bad input).
    pub fn is_evaluator_failure(&self) -> bool {
        if let Error::Trial { source, .. } = self {
            return source.is_evaluator_failure();
        }
        matches!(
            self,
            Error::MissingEntry(_)
                | Error::EvaluatorTimeout(_)
                | Error::ProtocolError(_)
                | Error::EvaluatorDied(_)
                | Error::EvaluatorReported { .. }
        )
    }
}
