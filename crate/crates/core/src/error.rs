use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("unknown client `{0}`")]
    UnknownClient(String),
    #[error("unknown segment {segment} of video `{video}`")]
    UnknownSegment { video: String, segment: usize },
    #[error("model error: {0}")]
    Model(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("decomposition error: {0}")]
    Decomposition(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("slot {slot}: {source}")]
    Slot {
        slot: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn in_slot(self, slot: usize) -> Self {
        match self {
            e @ Error::Slot { .. } => e,
            e => Error::Slot {
                slot,
                source: Box::new(e),
            },
        }
    }

    /// True for errors caused by bad input documents rather than by the
    /// simulation itself.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Parse(_)
            | Error::Validation(_)
            | Error::NotFound(_)
            | Error::UnknownClient(_)
            | Error::UnknownSegment { .. } => true,
            Error::Slot { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
