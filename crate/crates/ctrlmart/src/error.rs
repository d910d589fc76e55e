use std::path::PathBuf;

/// Errors surfaced by the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ctrlmart_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed table: {0}")]
    Table(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// 2 for bad input, 1 for failures during the computation.
    pub fn exit_code(&self) -> u8 {
        use ctrlmart_core::Error as E;
        match self {
            Error::Usage(_) | Error::Config { .. } => 2,
            Error::Core(
                E::DimensionMismatch { .. }
                | E::NotSymmetric { .. }
                | E::InvalidMeasure(_)
                | E::InvalidParameter(_)
                | E::UnsupportedFamily(_)
                | E::Parse { .. }
                | E::OffLattice { .. }
                | E::UnreachableTarget,
            ) => 2,
            _ => 1,
        }
    }
}
