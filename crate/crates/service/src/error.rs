use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("problem pool is empty")]
    EmptyPool,
    #[error("problem pool has {have} problems, a session needs {need}")]
    PoolTooSmall { have: usize, need: usize },
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("problem {0} is not assigned to this session")]
    UnknownProblem(String),
    #[error("problem {0} has no trials left")]
    TrialsExhausted(String),
    #[error("expected a choice for problem {expected}, got {got}")]
    OutOfOrder { expected: String, got: String },
    #[error("session {0} is no longer active")]
    SessionClosed(String),
    #[error("session has {remaining} trials left")]
    Incomplete { remaining: u32 },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("export failed: {0}")]
    Export(String),
    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ServiceError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
