use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller supplied an argument outside the operation's domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// A submission file failed to parse. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// A submission file had the wrong number of records.
    #[error("expected {expected} records, found {found}")]
    RecordCount { expected: usize, found: usize },

    /// The paired difference vector has zero variance.
    #[error("paired differences have zero standard deviation")]
    DegenerateDifference,

    #[error("event log consistency: {0}")]
    Consistency(String),

    /// A committed (non-trailing) log record could not be decoded.
    #[error("corrupt event log record {index}: {message}")]
    CorruptRecord { index: usize, message: String },

    /// The private leaderboard was requested before the competition closed.
    #[error("competition {0} is still open; the private leaderboard is sealed")]
    Sealed(String),

    #[error("unsupported event schema version {0}")]
    UnsupportedVersion(u32),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad caller input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Input(_)
                | Error::Parse { .. }
                | Error::RecordCount { .. }
                | Error::DegenerateDifference
        )
    }
}
