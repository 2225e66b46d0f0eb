//! The problem-side contract shared by builtin benchmarks and plugins.

use thiserror::Error;

use crate::space::{Direction, Params, SearchSpace, SpaceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid params: {0}")]
    Validation(#[from] SpaceError),
    #[error("invalid problem configuration: {0}")]
    Configuration(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    /// The problem can no longer evaluate anything; stops `optimize`.
    #[error("problem unavailable: {0}")]
    Unavailable(String),
}

/// An objective with a declared search space and per-objective directions.
pub trait Problem: Send + Sync {
    fn search_space(&self) -> &SearchSpace;

    fn directions(&self) -> &[Direction];

    /// Returns one finite value per direction. Must be deterministic in
    /// `params`.
    fn evaluate(&self, params: &Params) -> Result<Vec<f64>, ProblemError>;
}

impl<P: Problem + ?Sized> Problem for Box<P> {
    fn search_space(&self) -> &SearchSpace {
        (**self).search_space()
    }

    fn directions(&self) -> &[Direction] {
        (**self).directions()
    }

    fn evaluate(&self, params: &Params) -> Result<Vec<f64>, ProblemError> {
        (**self).evaluate(params)
    }
}
