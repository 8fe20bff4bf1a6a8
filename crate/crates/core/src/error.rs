use thiserror::Error;

/// Every fallible operation in the crate returns this.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("static chart degenerate at |rho| = {0} (needs |rho| < 1)")]
    ChartDegenerate(f64),
    #[error("Gauss map degenerate: {0}")]
    GaussMapDegenerate(String),
    #[error("undecided: {0}")]
    Undecided(String),
    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("numerical guard breached: {0}")]
    GuardBreach(String),
    #[error("infeasible constraint system: {0}")]
    Infeasible(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
