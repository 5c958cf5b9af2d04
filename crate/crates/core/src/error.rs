use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A computed probability fell outside `[-1e-12, 1 + 1e-12]`.
    #[error("probability out of range in {context}: {value}")]
    ProbabilityOutOfRange { context: &'static str, value: f64 },

    #[error("no clicks at this parameter point; QBER is undefined")]
    NoClicks,

    #[error(
        "M_max = {m_max} exceeds the dead time of {dead_pulses} pulses; \
         the model needs at most one click per block (M_max <= dead-time pulses)"
    )]
    DeadTimeConstraint { m_max: usize, dead_pulses: usize },

    #[error(
        "gain fixed point did not converge after {iterations} iterations \
         (last iterates {previous:e}, {last:e})"
    )]
    NoConvergence {
        iterations: usize,
        previous: f64,
        last: f64,
    },

    #[error("unknown amplitude distribution `{0}`")]
    UnknownDistribution(String),

    #[error("custom distribution: {0}")]
    CustomDistribution(String),

    #[error("parameter grid is empty")]
    EmptyGrid,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Tolerance band accepted before a raw probability is clamped into `[0, 1]`.
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// Clamps `value` into `[0, 1]` when it lies within [`PROBABILITY_SLACK`] of the
/// interval; anything further out is reported as an error.
pub fn checked_probability(context: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() || !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&value) {
        return Err(Error::ProbabilityOutOfRange { context, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_rounding_noise_only() {
        assert_eq!(checked_probability("t", -1e-13).unwrap(), 0.0);
        assert_eq!(checked_probability("t", 1.0 + 5e-13).unwrap(), 1.0);
        assert_eq!(checked_probability("t", 0.25).unwrap(), 0.25);
        assert!(checked_probability("t", -1e-9).is_err());
        assert!(checked_probability("t", 1.1).is_err());
        assert!(checked_probability("t", f64::NAN).is_err());
    }
}
