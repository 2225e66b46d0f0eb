//! The uniform sampler contract.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::space::{Direction, Params, SearchSpace};
use crate::trial::Trial;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("unsupported search space: {0}")]
    UnsupportedSpace(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    /// The sampler produced params outside the declared space. The engine
    /// records the trial as failed and the study continues.
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("{0}")]
    Failed(String),
}

/// Everything a sampler may look at when proposing the next trial.
#[derive(Debug, Clone, Copy)]
pub struct AskContext<'a> {
    pub trial_id: u64,
    pub seed: u64,
    pub search_space: &'a SearchSpace,
    pub directions: &'a [Direction],
    /// Every trial of the study so far, indexed by id.
    pub trials: &'a [Trial],
}

impl<'a> AskContext<'a> {
    pub fn completed(&self) -> impl Iterator<Item = &'a Trial> + 'a {
        self.trials.iter().filter(|t| t.is_complete())
    }

    pub fn n_objectives(&self) -> usize {
        self.directions.len()
    }

    /// Generator for this ask. A pure function of `(seed, trial_id)`, which
    /// makes every builtin sampler a pure function of `(seed, history)`.
    pub fn rng(&self) -> ChaCha8Rng {
        derived_rng(self.seed, self.trial_id)
    }
}

/// Seeds a ChaCha8 stream from a base seed and a salt via splitmix64 mixing.
pub fn derived_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(salt.wrapping_add(0x9E37_79B9_7F4A_7C15))))
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A strategy producing the next parameter suggestion from the trial history.
///
/// The engine serializes all calls into one instance.
pub trait Sampler: Send {
    /// Identity used in journals and error messages, e.g. `samplers/tpe`.
    fn name(&self) -> &str;

    fn ask(&mut self, ctx: &AskContext<'_>) -> Result<Params, SamplerError>;

    /// Rejects studies the sampler can never serve. Called once at study
    /// creation.
    fn validate(&self, _space: &SearchSpace, _directions: &[Direction]) -> Result<(), SamplerError> {
        Ok(())
    }

    /// Notification that a trial finished. Builtin samplers are stateless and
    /// ignore it.
    fn tell(&mut self, _trial: &Trial) -> Result<(), SamplerError> {
        Ok(())
    }
}

impl<S: Sampler + ?Sized> Sampler for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn ask(&mut self, ctx: &AskContext<'_>) -> Result<Params, SamplerError> {
        (**self).ask(ctx)
    }

    fn validate(&self, space: &SearchSpace, directions: &[Direction]) -> Result<(), SamplerError> {
        (**self).validate(space, directions)
    }

    fn tell(&mut self, trial: &Trial) -> Result<(), SamplerError> {
        (**self).tell(trial)
    }
}
