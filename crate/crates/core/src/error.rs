use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid variable name {0:?}")]
    InvalidName(String),
    #[error("variable {variable} needs at least two states, found {found}")]
    TooFewStates { variable: String, found: usize },
    #[error("variable {variable} has an invalid state label {state:?}")]
    InvalidState { variable: String, state: String },
    #[error("variable {variable} lists state {state:?} twice")]
    DuplicateState { variable: String, state: String },
    #[error("variable {0} is declared twice")]
    DuplicateVariable(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable {variable} has no state {state:?}")]
    UnknownState { variable: String, state: String },
    #[error("variable {0} has no conditional probability table")]
    MissingCpt(String),
    #[error("variable {0} has more than one conditional probability table")]
    DuplicateCpt(String),
    #[error("table for {child} lists parent {parent} twice")]
    DuplicateParent { child: String, parent: String },
    #[error("table for {child}: expected {expected} rows, found {found}")]
    RowCount {
        child: String,
        expected: usize,
        found: usize,
    },
    #[error("table for {child}, row {row}: expected {expected} entries, found {found}")]
    RowLength {
        child: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error(
        "table for {child}, row {row}, column {column}: entry must be a finite nonnegative number"
    )]
    InvalidEntry {
        child: String,
        row: usize,
        column: usize,
    },
    #[error("table for {child}, row {row} sums to zero and cannot be normalized")]
    ZeroRow { child: String, row: usize },
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("evidence assigns variable {0} twice")]
    DuplicateEvidence(String),

    #[error("factor values: expected {expected} entries, found {found}")]
    FactorLength { expected: usize, found: usize },
    #[error("factor values must be finite and nonnegative")]
    NegativeFactorValue,
    #[error("variable {0} appears twice in a factor scope")]
    DuplicateScopeVariable(String),
    #[error("variable {variable} has {left} states in one factor and {right} in the other")]
    ScopeMismatch {
        variable: String,
        left: usize,
        right: usize,
    },
    #[error("variable {0} is not in the factor scope")]
    NotInScope(String),
    #[error("impossible evidence: the observed values have zero probability under the model")]
    ImpossibleEvidence,

    #[error("query needs at least one node")]
    EmptyQuery,
    #[error("node {0} is requested twice")]
    DuplicateNode(String),
    #[error("joint state space has {size} configurations, above the cap of {cap}")]
    CapExceeded { size: u128, cap: u128 },

    #[error("thresholds need numeric state labels, but {variable} has state {state:?}")]
    NonNumericStates { variable: String, state: String },
    #[error("invalid threshold {0:?}; expected a comparator and a level such as \">=3\"")]
    InvalidThreshold(String),
    #[error("noise level must lie in [0, 1]")]
    InvalidNoise,

    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("samples have zero total weight")]
    ZeroWeight,

    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A located error from the network-definition reader.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
    pub message: String,
    pub snippet: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.snippet.is_empty() {
            write!(f, "\n    {}", self.snippet)?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}
