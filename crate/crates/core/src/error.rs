use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of panels; carries the best available estimate.
    #[error("quadrature did not converge within {panels} panels (value {value:e}, error estimate {error:e})")]
    NonConvergence { value: f64, error: f64, panels: usize },

    #[error("invalid bracket: {0}")]
    Bracket(String),

    /// The trajectory integrator could not make progress; `r` and `t` locate the stall.
    #[error("step size underflow at r = {r:e}, t = {t:e} (closest approach so far {r_closest:e})")]
    StepUnderflow { r: f64, t: f64, r_closest: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
