//! Ask/tell black-box optimization engine.
//!
//! A [`Study`] couples a declared [`SearchSpace`], one or more objective
//! [`Direction`]s and a [`Sampler`]. Trials flow out through [`Study::ask`]
//! and come back through [`Study::tell`]; every state change is appended to a
//! checksummed journal that [`journal::replay`] can rebuild exactly.
//!
//! Numeric kernels (dominance sorting, crowding distance, hypervolume, the
//! Nelder–Mead simplex and the benchmark functions) are generic over
//! [`num::Real`]; the aliases below fix them to `f64`.

pub mod benchmarks;
pub mod journal;
pub mod num;
pub mod pareto;
pub mod problem;
pub mod sampler;
pub mod samplers;
pub mod space;
pub mod study;
pub mod trial;

pub use journal::{JournalError, JournalRecord, StudySnapshot};
pub use num::Real;
pub use problem::{Problem, ProblemError};
pub use sampler::{AskContext, Sampler, SamplerError};
pub use space::{Direction, Distribution, ParamValue, Params, SearchSpace, SpaceError};
pub use study::{Study, StudyConfig, StudyError};
pub use trial::{Outcome, Trial, TrialState};

/// BBOB-style problem over `f64`.
pub type Bbob = benchmarks::BbobProblem<f64>;
/// Bi-objective double sphere over `f64`.
pub type BiSphere = benchmarks::BiSphereProblem<f64>;
/// Nelder–Mead state machine over `f64`.
pub type NelderMeadSimplex = samplers::nelder_mead::NelderMeadState<f64>;
