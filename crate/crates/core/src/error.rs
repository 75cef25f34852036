use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    /// `row` is the 1-based data row (the header is not counted).
    #[error("parse error at data row {row} (line {line}), column '{column}': {message}")]
    Parse {
        row: usize,
        line: usize,
        column: String,
        message: String,
    },
    #[error("unknown covariate column '{0}'")]
    UnknownColumn(String),
    #[error("covariate and conditioning column are the same: '{0}'")]
    SameColumn(String),
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("outcome has zero variance")]
    ZeroVariance,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("fit is degenerate (constant outcome); no slope to test")]
    DegenerateFit,
    #[error("outcome is constant over the selected rows")]
    ConstantOutcome,
    #[error("need at least two covariates, found {0}")]
    TooFewCovariates(usize),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
