use thiserror::Error;

/// Errors raised by the analytical model, the simulator and the CLI front-end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// The model itself is undefined for this configuration (e.g. a
    /// divergent far-field interference tail for η ≤ 2).
    #[error("model domain error: {0}")]
    ModelDomain(String),

    /// A quadrature failed to reach its tolerance. Carries the best estimate.
    #[error("integral `{what}` did not converge: estimate {estimate:e}, error bound {error:e}")]
    Convergence {
        what: String,
        estimate: f64,
        error: f64,
    },

    /// The CDMA base-station power equation has no finite positive solution.
    #[error("infeasible cell load: power-equation denominator {denominator:e} is not positive")]
    InfeasibleLoad { denominator: f64 },

    /// A search target cannot be reached on the configured range.
    #[error("target out of range: {0}")]
    Range(String),

    /// An invalid configuration value.
    #[error("invalid configuration `{field}`: {detail}")]
    Config { field: String, detail: String },
}

impl ModelError {
    pub fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        ModelError::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub fn config(field: impl Into<String>, detail: impl Into<String>) -> Self {
        ModelError::Config {
            field: field.into(),
            detail: detail.into(),
        }
    }

    /// Names the integral in a convergence error; other variants pass through.
    pub(crate) fn in_integral(self, what: impl Into<String>) -> Self {
        match self {
            ModelError::Convergence {
                estimate, error, ..
            } => ModelError::Convergence {
                what: what.into(),
                estimate,
                error,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
