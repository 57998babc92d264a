use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmmsError {
    #[error("dimension mismatch: expected n_max = {expected}, found n_max = {found}")]
    Dimension { expected: usize, found: usize },

    /// The requested cutoff loses more than the truncation budget.
    #[error("cutoff n_max = {n_max} too small: tail mass {tail:.3e} exceeds budget; need n_max >= {required}")]
    Truncation {
        n_max: usize,
        required: usize,
        tail: f64,
    },

    #[error("invalid value for `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical integrity failure: {0}")]
    Integrity(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl GmmsError {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        GmmsError::Domain {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            GmmsError::Domain { .. } | GmmsError::Parse(_) | GmmsError::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, GmmsError>;
