use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::SliceLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus directory {0} contains no slice files")]
    EmptyCorpus(PathBuf),

    #[error("no token reaches min_count = {0}")]
    EmptyVocabulary(u64),

    #[error("invalid slice file name {0}: expected `<integer label>.txt`")]
    BadSliceName(PathBuf),

    #[error("duplicate slice label {0}")]
    DuplicateSlice(SliceLabel),

    #[error("unknown slice label {0}")]
    UnknownSlice(SliceLabel),

    #[error("slice {0} yields no training samples")]
    EmptySlice(SliceLabel),

    #[error("no training samples in the selected corpus")]
    EmptyStream,

    #[error("token id {id} out of range for vocabulary of size {len}")]
    TokenOutOfRange { id: u32, len: usize },

    #[error("cannot sample negatives excluding the only vocabulary entry")]
    DegenerateNegatives,

    #[error("word `{0}` is not in the vocabulary")]
    OutOfVocabulary(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Empty(&'static str),

    #[error("rank-deficient anchor system: {0}")]
    RankDeficient(String),

    #[error("format error in {path} line {line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error stems from user input (bad files, flags, data)
    /// rather than a fault inside the toolkit. Malformed JSON always comes
    /// from a file handed in; CSV is only ever written.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Csv(_))
    }
}
