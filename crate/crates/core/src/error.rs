//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by grammar construction and tree operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("label mismatch at {path:?}: site is labelled {expected}, tree root is {found}")]
    LabelMismatch {
        path: Vec<usize>,
        expected: String,
        found: String,
    },
    #[error("node at {path:?} is not an open substitution site")]
    NotASubstitutionSite { path: Vec<usize> },
    #[error("node at {path:?} carries a null-adjunction constraint")]
    NullAdjunctionViolation { path: Vec<usize> },
    #[error("node at {path:?} is a foot node; adjunction is not permitted there")]
    AdjunctionAtFoot { path: Vec<usize> },
    #[error("address {path:?} does not exist in the tree")]
    BadAddress { path: Vec<usize> },
    #[error("tree is incomplete: unfilled non-terminal leaf labelled {label}")]
    IncompleteTree { label: String },
    #[error("unknown built-in grammar {0:?} (expected narx, narmax, trig or full)")]
    UnknownGrammar(String),
    #[error("invalid grammar: {0}")]
    InvalidGrammar(String),
    #[error("grammar text, line {line}: {message}")]
    TextParse { line: usize, message: String },
}

/// Errors raised while decoding token sequences or evaluating models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("token {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("lag {lag} out of range at sample {index}")]
    LagOutOfRange { lag: usize, index: usize },
    #[error("simulation diverged at sample {at}")]
    Divergence { at: usize },
    #[error("equation text, byte {offset}: {message}")]
    Equation { offset: usize, message: String },
}

/// Errors raised by parameter estimation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EstimationError {
    #[error("insufficient data: {rows} usable rows for {parameters} parameters")]
    InsufficientData { rows: usize, parameters: usize },
    #[error("regressor matrix or solution contains non-finite values")]
    NumericalFailure,
}

/// Errors raised by dataset handling and synthetic data generation.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: non-finite sample")]
    NonFiniteSample { path: String, line: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("unknown synthetic system {0:?} (expected s1, s2, s3 or s4)")]
    UnknownSystem(String),
    #[error("synthetic system diverged at sample {at}; check its coefficients")]
    Divergence { at: usize },
    #[error("sidecar {path}: {message}")]
    Sidecar { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised when computing quality measures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QualityError {
    #[error("degenerate output: measured output has zero variance over the scored range")]
    DegenerateOutput,
}
