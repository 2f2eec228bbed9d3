use std::fmt;

/// A single invariant violation, tagged with the path of the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DroError {
    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unbounded conjugate domain unknown: {0}")]
    UnknownPiBound(String),
    #[error("recourse problem for scenario {scenario}: {detail}")]
    Recourse { scenario: usize, detail: String },
    #[error("stepsizes rejected: {0}")]
    Stepsize(String),
    #[error("bisection did not converge, bracket [{lo}, {hi}]")]
    Bisection { lo: f64, hi: f64 },
    #[error("LP stalled after {iterations} iterations (basis {basis:?})")]
    LpStall { iterations: usize, basis: Vec<usize> },
    #[error("QP active-set cycling guard tripped after {0} steps")]
    QpCycle(usize),
    #[error("solver diagnostic: {0}")]
    Diagnostic(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, DroError>;
