use rand::seq::IndexedRandom;
use rand::Rng;

use crate::sampler::{AskContext, Sampler, SamplerError};
use crate::space::{Distribution, ParamValue, Params, SearchSpace};

/// Draws one value from `dist`: uniform on `[low, high]` for floats (in the
/// log domain when `log_scale`), uniform on the inclusive range for ints and
/// uniform over choices for categoricals.
pub fn sample_distribution<R: Rng + ?Sized>(dist: &Distribution, rng: &mut R) -> ParamValue {
    match dist {
        Distribution::Float { .. } => {
            let (lo, hi) = dist.internal_bounds().expect("numeric");
            let u = if lo == hi { lo } else { rng.random_range(lo..=hi) };
            dist.from_internal(u)
        }
        Distribution::Int { low, high } => ParamValue::Int(rng.random_range(*low..=*high)),
        Distribution::Categorical { choices } => ParamValue::Categorical(
            choices.choose(rng).expect("validated non-empty").clone(),
        ),
    }
}

/// Independent draw of every parameter of `space`, in declaration order.
pub fn random_sample<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Params {
    space
        .iter()
        .map(|(name, dist)| (name.to_owned(), sample_distribution(dist, rng)))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct RandomSampler;

impl RandomSampler {
    pub const NAME: &'static str = "samplers/random";
}

impl Sampler for RandomSampler {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn ask(&mut self, ctx: &AskContext<'_>) -> Result<Params, SamplerError> {
        Ok(random_sample(ctx.search_space, &mut ctx.rng()))
    }
}
