use crate::sampler::{AskContext, Sampler, SamplerError};
use crate::samplers::nelder_mead::NelderMeadSampler;
use crate::samplers::nsga2::{Nsga2Config, Nsga2Sampler};
use crate::samplers::tpe::{TpeConfig, TpeSampler};
use crate::space::{Params, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Random,
    NelderMead,
    Tpe,
    Nsga2,
}

/// Static routing table: two or more objectives go to NSGA-II, spaces with a
/// categorical parameter go to TPE, everything else to Nelder–Mead.
pub fn auto_select(space: &SearchSpace, n_objectives: usize) -> SamplerKind {
    if n_objectives >= 2 {
        SamplerKind::Nsga2
    } else if space.has_categorical() {
        SamplerKind::Tpe
    } else {
        SamplerKind::NelderMead
    }
}

/// Delegates every ask to the sampler chosen by [`auto_select`].
///
/// Integer parameters are not categorical, so an int/float space routes to
/// Nelder–Mead, which rejects ints; such spaces are sent to TPE instead.
#[derive(Debug, Clone, Default)]
pub struct AutoSampler {
    tpe: TpeSampler,
    nsga2: Nsga2Sampler,
    nelder_mead: NelderMeadSampler,
}

impl AutoSampler {
    pub const NAME: &'static str = "samplers/auto_sampler";

    pub fn new(tpe: TpeConfig, nsga2: Nsga2Config) -> Result<Self, SamplerError> {
        Ok(Self {
            tpe: TpeSampler::new(tpe)?,
            nsga2: Nsga2Sampler::new(nsga2)?,
            nelder_mead: NelderMeadSampler::new(),
        })
    }

    pub fn route(space: &SearchSpace, n_objectives: usize) -> SamplerKind {
        match auto_select(space, n_objectives) {
            SamplerKind::NelderMead
                if space
                    .iter()
                    .any(|(_, d)| !matches!(d, crate::space::Distribution::Float { .. })) =>
            {
                SamplerKind::Tpe
            }
            kind => kind,
        }
    }
}

impl Sampler for AutoSampler {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn ask(&mut self, ctx: &AskContext<'_>) -> Result<Params, SamplerError> {
        match Self::route(ctx.search_space, ctx.n_objectives()) {
            SamplerKind::Nsga2 => self.nsga2.ask(ctx),
            SamplerKind::Tpe => self.tpe.ask(ctx),
            SamplerKind::NelderMead => self.nelder_mead.ask(ctx),
            SamplerKind::Random => unreachable!("never routed"),
        }
    }
}
