use thiserror::Error;

/// Errors raised by the analytic engine, the simulator and the experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e}) after {intervals} subintervals")]
    QuadratureConvergence {
        tolerance: f64,
        estimate: f64,
        intervals: usize,
    },

    #[error("enumeration needs {required} outcome sequences, budget is {budget}")]
    EnumerationBudget { required: f64, budget: u64 },

    #[error("latency distribution did not converge: {0}")]
    NonConvergence(String),

    #[error("trial exceeded the slot cap of {0} slots")]
    SlotCapExceeded(u64),

    #[error("trial {index}: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid experiment: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures that come from the numerics rather than from bad input or I/O.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::QuadratureConvergence { .. }
            | Error::EnumerationBudget { .. }
            | Error::NonConvergence(_)
            | Error::SlotCapExceeded(_) => true,
            Error::Trial { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
