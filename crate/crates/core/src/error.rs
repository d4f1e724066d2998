use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("evaluation at a pole: k^2 = {ksq} coincides with eigenvalue {eigenvalue}")]
    Pole { ksq: f64, eigenvalue: f64 },

    #[error("basis cutoff {cutoff} too small for |k^2| = {ksq} (need cutoff >= {factor} |k^2|)")]
    Cutoff { cutoff: f64, ksq: f64, factor: f64 },

    #[error("mode count {count} exceeds the configured maximum {max}")]
    Resource { count: usize, max: usize },

    #[error("singular amplitude denominator (|D+| = {0:e})")]
    Singular(f64),

    #[error("mode ({n}, {m}) is not isolated: {reason}")]
    Isolation { n: u32, m: u32, reason: String },

    #[error("sample too small: {got} values, need at least {need}")]
    SampleTooSmall { got: usize, need: usize },

    #[error("invalid parameter: {0}")]
    Invalid(String),
}

pub type Result<R, E = Error> = std::result::Result<R, E>;
