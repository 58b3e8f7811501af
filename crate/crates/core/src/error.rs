use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an input value was violated.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The integrand produced a non-finite value at a quadrature node.
    #[error("non-finite integrand value {value} at node ({x}, {y})")]
    Evaluation { x: f64, y: f64, value: f64 },

    /// The grid is too coarse for the metric to respect its analytic bounds.
    #[error("error metric {value} lies outside [0, 2] by more than {tolerance}; refine the grid")]
    QuadratureResolution { value: f64, tolerance: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("rejection sampler acceptance rate {rate:.3e} is too low")]
    SamplerEfficiency { rate: f64 },

    #[error("settling analysis failed: {0}")]
    Settling(String),

    #[error("statistical test failed: {0}")]
    Test(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
