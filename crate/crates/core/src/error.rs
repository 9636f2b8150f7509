use std::path::PathBuf;

use thiserror::Error;

use crate::similarity::ClassId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero vector{}", .0.as_ref().map(|id| format!(" for class `{id}`")).unwrap_or_default())]
    ZeroVector(Option<ClassId>),

    #[error("non-finite value{}", .0.as_ref().map(|id| format!(" for class `{id}`")).unwrap_or_default())]
    NonFinite(Option<ClassId>),

    #[error("empty class id")]
    EmptyId,

    #[error("duplicate class id `{0}`")]
    DuplicateId(ClassId),

    #[error("unknown class id `{0}`")]
    UnknownClass(ClassId),

    #[error("class `{0}` is not a candidate")]
    NotCandidate(ClassId),

    #[error("candidate index {index} out of range for {count} candidates")]
    CandidateIndex { index: usize, count: usize },

    #[error("class `{0}` already chosen")]
    AlreadyChosen(ClassId),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("wrong engine: {engine} requires {requirement}")]
    WrongEngine { engine: &'static str, requirement: String },

    #[error("similarity ratio undefined: base set is empty")]
    EmptyBaseSet,

    #[error("water-level search failed: rate sum {low_sum} at l={low}, {high_sum} at l={high}, target {target}")]
    BracketFailure { low: f64, high: f64, low_sum: f64, high_sum: f64, target: f64 },

    #[error("fractional point is not budget feasible: coordinate sum {sum}, budget {budget}")]
    NotBudgetFeasible { sum: f64, budget: usize },

    #[error("enumeration of {count} subsets exceeds the cap of {cap}; rerun without the exhaustive oracle")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("design matrix is collinear (condition number {condition:.3e})")]
    Collinear { condition: f64 },

    #[error("embeddings required: {0}")]
    MissingEmbeddings(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}:{line}: {message}")]
    ParseLine { path: String, line: u64, message: String },

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
