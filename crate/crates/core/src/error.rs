use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{0}: no samples")]
    EmptyFile(PathBuf),

    #[error("manifest entry {index} ({trial_id}): {source}")]
    Entry {
        index: usize,
        trial_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "duplicate trial (subject {subject_id}, task {task}, super-trial {super_trial_index})"
    )]
    DuplicateTrial {
        subject_id: String,
        task: String,
        super_trial_index: u32,
    },

    #[error("invalid trial: {0}")]
    InvalidTrial(String),

    #[error("invalid channel layout: {0}")]
    InvalidLayout(String),

    #[error("empty input")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("channel mismatch: expected {expected} input channels, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("series of length {0} is too short (need at least 3 samples)")]
    LengthTooShort(usize),

    #[error("target does not match the {0} head")]
    HeadMismatch(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("need at least 2 trials, got {0}")]
    TooFewTrials(usize),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("output index {index} out of range for {n_out} outputs")]
    IndexOutOfRange { index: usize, n_out: usize },

    #[error("trace does not belong to this model: {0}")]
    TraceMismatch(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least 2 values, got {0}")]
    TooShort(usize),

    #[error("dataset has a single super-trial index; LOSO needs at least 2")]
    SingleSuperTrial,

    #[error("repeat {repeat}, fold {fold}: {source}")]
    Fold {
        repeat: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
