use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A size parameter is outside its admissible range.
    #[error("size error: {0}")]
    Size(String),
    /// A value lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Array or sequence dimensions do not agree.
    #[error("shape error: {0}")]
    Shape(String),
    /// A bit-level index is out of range.
    #[error("level {level} out of range (levels 0..={max})")]
    Level { level: usize, max: usize },
    /// An exhaustive enumeration would exceed its configured budget.
    #[error("budget exceeded: {required} items required, budget is {budget}")]
    Budget { required: f64, budget: u64 },
    /// An iterative optimizer stopped at its iteration cap.
    #[error("no convergence after {iterations} iterations (last value {last_value})")]
    Convergence {
        iterations: usize,
        last_value: f64,
        last_iterate: Vec<f64>,
    },
    /// A root search bracket does not contain a sign change.
    #[error("bracket [{lo}, {hi}] does not contain a sign change")]
    Bracket { lo: f64, hi: f64 },
    /// A requested target is outside the attainable range.
    #[error("range error: {0}")]
    Range(String),
    /// An experiment or enumeration is misconfigured.
    #[error("configuration error: {0}")]
    Config(String),
    /// A requested operating point cannot be realized.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
