use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid degree distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite density evolution state at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("density evolution did not converge within {max_iters} iterations")]
    NotConverged { max_iters: usize },

    #[error("fixed point is unstable (|1 - df/dx| = {margin:e}); too close to a phase transition")]
    UnstableFixedPoint { margin: f64 },

    #[error("enumeration needs {needed} configurations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected: "[0, 1]",
        })
    }
}

pub(crate) fn check_channel(name: &'static str, value: f64) -> Result<()> {
    if (0.0..0.5).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected: "[0, 0.5)",
        })
    }
}
