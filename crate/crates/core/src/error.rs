use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    /// Layer index the issue refers to, if any.
    pub layer: Option<usize>,
    pub field: String,
    pub message: String,
}

impl ValidationIssue {
    pub fn global(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            layer: None,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn layer(layer: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            layer: Some(layer),
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layer {
            Some(k) => write!(f, "layers[{k}].{}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("numerical evaluation did not converge: {0}")]
    NonConvergent(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge within {terms} terms (last term {last_term:e})")]
    SeriesNonConvergent { terms: usize, last_term: f64 },

    #[error("derivative of order {order} unstable: estimate {value:e}, disagreement {error:e}")]
    DerivativeUnstable { order: usize, value: f64, error: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no association candidate in {discarded} of {trials} trials")]
    NoCandidate { discarded: usize, trials: usize },

    #[error("invalid configuration: {}", join_issues(.0))]
    Invalid(Vec<ValidationIssue>),

    #[error("scenario parse error: {0}")]
    Parse(String),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
