use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::Label;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure category; the CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numeric => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("row {row}: label `{value}` matches neither the pass nor the fail token")]
    LabelUnmapped { row: usize, value: String },
    #[error("malformed input at row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("no records left after cleaning")]
    EmptyAfterCleaning,
    #[error("class {label} has {count} records, need at least {k}")]
    TooFewPerClass {
        label: Label,
        count: usize,
        k: usize,
    },
    #[error("split leaves one side empty")]
    DegenerateSplit,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("both samples are constant and equal")]
    ZeroVariance,
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("histogram has fewer than two separated peaks")]
    NoBimodalStructure,
    #[error("both class likelihoods vanish at x = {0}")]
    ZeroEvidence(f64),
    #[error("posterior never stays above {0} up to the top of the score range")]
    UnreachableConfidence(f64),
    #[error("no PASS records")]
    NoPositives,
    #[error("both labels are required")]
    SingleClass,
    #[error("fit diverged: coefficient norm {0:e} indicates separable data")]
    Separation(f64),
    #[error("fit did not converge in {0} iterations")]
    NotConverged(usize),
    #[error("linear system is singular")]
    Singular,
    #[error("predicted probability never stays above {0} up to the top of the score range")]
    UnreachableProbability(f64),
    #[error("calibration set is empty")]
    EmptyCalibration,
    #[error("test set is empty")]
    EmptyTest,
    #[error("PASS is not in the prediction set on any suffix of the score grid")]
    PassNeverIncluded,
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            ConfigInvalid(_) | OutOfRange(_) => ErrorKind::Usage,
            FileNotFound(_)
            | MissingField(_)
            | LabelUnmapped { .. }
            | Malformed { .. }
            | EmptyAfterCleaning
            | TooFewPerClass { .. }
            | DegenerateSplit
            | TooFewSamples { .. }
            | NoPositives
            | SingleClass
            | EmptyCalibration
            | EmptyTest
            | Io(_)
            | Csv(_)
            | Json(_) => ErrorKind::Data,
            ZeroVariance
            | NoBimodalStructure
            | ZeroEvidence(_)
            | UnreachableConfidence(_)
            | Separation(_)
            | NotConverged(_)
            | Singular
            | UnreachableProbability(_)
            | PassNeverIncluded => ErrorKind::Numeric,
        }
    }
}
