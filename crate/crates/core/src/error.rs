use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument or configuration value lies outside its valid domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A keyed lookup (CPI year, checkpoint year) found nothing.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// Input data (CSV rows, records) could not be parsed or is inconsistent.
    #[error("data error: {0}")]
    Data(String),

    #[error("bracket [{low}, {high}] does not straddle the pass/fail boundary: {detail}")]
    Bracketing { low: f64, high: f64, detail: String },

    #[error("non-monotone pass indicator: passes at {low} but fails at {high}")]
    NonMonotone { low: f64, high: f64 },

    /// R² is undefined because one of the series has zero variance.
    #[error("undefined R²: {0}")]
    UndefinedRSquared(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// True for failures of a numerical procedure rather than of its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Bracketing { .. } | Error::NonMonotone { .. } | Error::UndefinedRSquared(_)
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}
