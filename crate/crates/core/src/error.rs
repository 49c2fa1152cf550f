use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {matrix} at row {row}, column {col}")]
    NonFinite {
        matrix: &'static str,
        row: usize,
        col: usize,
    },

    #[error("design column 0 must be identically 1 (row {row} holds {value})")]
    BadIntercept { row: usize, value: f64 },

    #[error("invalid penalty specification: {0}")]
    InvalidPenalty(String),

    #[error("difference penalties need at least two covariates (p = {p})")]
    DegenerateP { p: usize },

    #[error("design matrix is rank deficient (numerical rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("fold {fold} leaves {train_rows} training rows for {cols} unpenalized columns")]
    FoldTooSmall {
        fold: usize,
        train_rows: usize,
        cols: usize,
    },

    #[error("invalid cross-validation plan: {0}")]
    InvalidPlan(String),

    #[error("invalid simulation spec: {0}")]
    BadSpec(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("empty input: {0}")]
    EmptyFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
