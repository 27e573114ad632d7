use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),
    #[error("quadrature did not converge ({context}): estimate {estimate:e}, error {error:e}")]
    Quadrature {
        context: String,
        estimate: f64,
        error: f64,
    },
    #[error("root finding failed: {0}")]
    Root(String),
    #[error("flow u({t}, {lambda}) is undefined: lambda must lie in ({kappa}, {v})")]
    BackwardDomain {
        t: f64,
        lambda: f64,
        kappa: f64,
        v: f64,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("absorbed state (total mass {0})")]
    Absorbed(f64),
    #[error("undecidable: {0}")]
    Undecidable(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

impl Error {
    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
