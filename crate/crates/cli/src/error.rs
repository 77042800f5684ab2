use qvision_core::Error as CoreError;

/// Errors surfaced by the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CliError {
    /// 2 usage/config, 3 data, 4 numerical/capacity.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_CONFIG,
            CliError::Output { .. } => EXIT_DATA,
            CliError::Core(e) => match e {
                CoreError::Config(_) | CoreError::Shape(_) | CoreError::Serde(_) => EXIT_CONFIG,
                CoreError::Ingest(_)
                | CoreError::IngestFile { .. }
                | CoreError::Annotation { .. }
                | CoreError::Io { .. }
                | CoreError::Enhance(_)
                | CoreError::Resample(_)
                | CoreError::Split(_)
                | CoreError::Train(_) => EXIT_DATA,
                CoreError::Numerical(_)
                | CoreError::Capacity(_)
                | CoreError::Weight(_)
                | CoreError::Encoding(_)
                | CoreError::DegenerateModel(_) => EXIT_NUMERICAL,
            },
        }
    }
}
