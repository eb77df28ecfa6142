use alloc::string::String;

/// Errors surfaced by dataset construction, training, and auditing.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("protected group a={0} has no members")]
    MissingGroup(u8),
    #[error("label y={0} has no members")]
    MissingLabel(u8),
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("training diverged at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("cell (a={group}, y={label}) is empty")]
    DegenerateCell { group: u8, label: u8 },
    #[error("row {row}: {inner}")]
    RowError { row: usize, inner: alloc::boxed::Box<Error> },
    #[error("input slice is empty")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{failed} of {total} repeats failed; need at least 80% successes")]
    TooManyFailures { failed: usize, total: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
