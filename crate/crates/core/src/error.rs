use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{field}` = {value} violates {constraint}")]
    ParameterDomain {
        field: &'static str,
        value: f64,
        constraint: String,
    },

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("grid construction: {0}")]
    Grid(String),

    #[error("node {node} is not an interior node")]
    NotInterior { node: usize },

    #[error(
        "no convergence after {iterations} iterations \
         (update sup {update_sup:.3e}, residual sup {residual_sup:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        update_sup: f64,
        residual_sup: f64,
        trace: Vec<crate::solver::ProgressRecord>,
    },

    #[error("non-finite value at node {node} in iteration {iteration}")]
    NonFinite { iteration: usize, node: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config: key `{key}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        key: String,
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(field: &'static str, value: f64, constraint: impl Into<String>) -> Error {
    Error::ParameterDomain {
        field,
        value,
        constraint: constraint.into(),
    }
}
