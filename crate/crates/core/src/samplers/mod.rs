//! Reference samplers behind the [`Sampler`](crate::sampler::Sampler) contract.

pub mod auto;
pub mod nelder_mead;
pub mod nsga2;
pub mod random;
pub mod tpe;

pub use auto::{auto_select, AutoSampler, SamplerKind};
pub use nelder_mead::{NelderMeadSampler, NelderMeadState};
pub use nsga2::{Nsga2Config, Nsga2Sampler};
pub use random::{random_sample, RandomSampler};
pub use tpe::{TpeConfig, TpeSampler};
