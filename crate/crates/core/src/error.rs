use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function (e.g. a non-positive interval).
    #[error("domain error: {name} must be positive, got {value}")]
    Domain { name: &'static str, value: f64 },

    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The kernel spectrum vanishes (numerically) at the requested frequency.
    #[error("spectrum hole at omega = {omega}: |psi_hat|^2 = {magnitude_sq:e}")]
    SpectrumHole { omega: f64, magnitude_sq: f64 },

    #[error("sensor {index} at (T={t}, S={s}) lies outside the grid")]
    OutsideGrid { index: usize, t: f64, s: f64 },

    #[error("zero denominator in cell (i={i}, j={j}) at (T={t}, S={s})")]
    ZeroDenominator { i: usize, j: usize, t: f64, s: f64 },

    #[error("root not bracketed: {0}")]
    NoRoot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Rejects non-positive or non-finite values.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { name, value })
    }
}
