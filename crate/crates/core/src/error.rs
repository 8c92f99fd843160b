use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are grouped so that front-ends can map them onto exit codes:
/// input/precondition problems on one side, numeric failures on the other.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mode error: expected {expected} digits, found {found}")]
    Mode {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("index {index} is outside the evaluation horizon 1..={horizon}")]
    Range { index: usize, horizon: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("construction inconsistent: {0}")]
    Inconsistent(String),

    #[error("supremum for L_{index} unresolved after scanning {scanned} indices (last term {last_term:.6e}, running max {running_max:.6e})")]
    UnresolvedSup {
        index: usize,
        scanned: usize,
        last_term: f64,
        running_max: f64,
    },

    #[error("series diverges for t = {0} (need t > 1)")]
    Divergence(f64),

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("precision exhausted: certified {certified} of {requested} digits")]
    PrecisionExhausted { certified: usize, requested: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::UnresolvedSup { .. }
                | Error::Bracket(_)
                | Error::PrecisionExhausted { .. }
                | Error::Numeric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
