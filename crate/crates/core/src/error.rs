use thiserror::Error;

/// Errors produced by the attack model, simulator and optimizer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("degenerate stage: success probability is zero")]
    DegenerateStage,

    #[error("draw script exhausted at draw index {index}")]
    ScriptExhausted { index: usize },

    #[error("enumeration truncated with residual probability mass {residual:e}")]
    Truncated { residual: f64 },

    #[error("no feasible attack found: click residual {click_residual:e}, control residual {control_residual:e}")]
    NoFeasiblePoint { click_residual: f64, control_residual: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg()))
    }
}

pub(crate) fn check_probability(name: &str, x: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&x), || {
        format!("{name} = {x} is not a probability")
    })
}
