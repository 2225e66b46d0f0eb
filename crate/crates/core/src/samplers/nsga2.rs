//! Generational NSGA-II.
//!
//! Trial ids `[g * P, (g + 1) * P)` form generation `g`. Generation 0 is
//! uniform random. The parent population for generation `g` is the elitist
//! survivor set of the previous population and every completed trial of
//! generation `g - 1`; trials still running at ask time simply do not take
//! part, so late results fold into the next generation.

use std::cmp::Ordering;

use rand::Rng;

use crate::pareto::{crowding_distance, non_dominated_sort};
use crate::sampler::{AskContext, Sampler, SamplerError};
use crate::samplers::random::{random_sample, sample_distribution};
use crate::space::{Direction, Distribution, Params, SearchSpace};
use crate::trial::Trial;

#[derive(Debug, Clone, PartialEq)]
pub struct Nsga2Config {
    pub population_size: usize,
    pub crossover_prob: f64,
    /// `None` means `1 / d` for a `d`-parameter space.
    pub mutation_prob_per_param: Option<f64>,
    /// Shared by SBX crossover and polynomial mutation.
    pub distribution_index: f64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            population_size: 20,
            crossover_prob: 0.9,
            mutation_prob_per_param: None,
            distribution_index: 20.0,
        }
    }
}

impl Nsga2Config {
    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |m: &str| Err(SamplerError::Configuration(m.into()));
        if self.population_size == 0 || !self.population_size.is_multiple_of(2) {
            return bad("population_size must be a positive even integer");
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad("crossover_prob must lie in [0, 1]");
        }
        if let Some(p) = self.mutation_prob_per_param {
            if !(0.0..=1.0).contains(&p) {
                return bad("mutation_prob_per_param must lie in [0, 1]");
            }
        }
        if !(self.distribution_index > 0.0 && self.distribution_index.is_finite()) {
            return bad("distribution_index must be positive");
        }
        Ok(())
    }
}

/// Rank and crowding of one population member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitness {
    pub rank: usize,
    pub crowding: f64,
}

/// Binary tournament comparison: lower rank wins, then larger crowding
/// distance. Returns `true` if `a` wins; ties go to `a`.
pub fn tournament_winner(a: Fitness, b: Fitness) -> bool {
    match a.rank.cmp(&b.rank) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.crowding >= b.crowding,
    }
}

fn fitness(values: &[Vec<f64>], directions: &[Direction]) -> Vec<Fitness> {
    let fronts = non_dominated_sort(values, directions).expect("values have study arity");
    let mut out = vec![
        Fitness {
            rank: 0,
            crowding: 0.0
        };
        values.len()
    ];
    for (rank, front) in fronts.iter().enumerate() {
        let vals: Vec<Vec<f64>> = front.iter().map(|&i| values[i].clone()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&vals)) {
            out[i] = Fitness { rank, crowding: d };
        }
    }
    out
}

/// Elitist truncation of `pool` to `size` members by (rank, crowding).
fn survivors<'a>(pool: Vec<&'a Trial>, size: usize, directions: &[Direction]) -> Vec<&'a Trial> {
    if pool.len() <= size {
        return pool;
    }
    let values: Vec<Vec<f64>> = pool
        .iter()
        .map(|t| t.values.clone().expect("complete"))
        .collect();
    let fronts = non_dominated_sort(&values, directions).expect("values have study arity");
    let mut chosen = Vec::with_capacity(size);
    for front in fronts {
        if chosen.len() + front.len() <= size {
            chosen.extend(front);
            continue;
        }
        let vals: Vec<Vec<f64>> = front.iter().map(|&i| values[i].clone()).collect();
        let dist = crowding_distance(&vals);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            dist[b]
                .partial_cmp(&dist[a])
                .unwrap_or(Ordering::Equal)
                .then(front[a].cmp(&front[b]))
        });
        chosen.extend(order.into_iter().take(size - chosen.len()).map(|k| front[k]));
        break;
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| pool[i]).collect()
}

/// Parent population for the generation that `trial_id` belongs to.
pub fn parent_population<'a>(
    trials: &'a [Trial],
    trial_id: u64,
    directions: &[Direction],
    population_size: usize,
) -> Vec<&'a Trial> {
    let p = population_size as u64;
    let generation = trial_id / p;
    let mut population: Vec<&Trial> = Vec::new();
    for g in 0..generation {
        let members = trials
            .iter()
            .filter(|t| t.is_complete() && t.id / p == g && t.id < trial_id);
        let mut pool = population;
        pool.extend(members);
        population = survivors(pool, population_size, directions);
    }
    population
}

fn sbx(x1: f64, x2: f64, eta: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    let beta = if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    };
    let c1 = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2);
    let c2 = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2);
    if rng.random::<bool>() {
        c1
    } else {
        c2
    }
}

fn polynomial_mutation(x: f64, low: f64, high: f64, eta: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    let delta = if u < 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0)) - 1.0
    } else {
        1.0 - (2.0 * (1.0 - u)).powf(1.0 / (eta + 1.0))
    };
    x + delta * (high - low)
}

/// Produces one child of `a` and `b`.
pub fn make_child(
    space: &SearchSpace,
    a: &Params,
    b: &Params,
    config: &Nsga2Config,
    rng: &mut impl Rng,
) -> Params {
    let d = space.len().max(1);
    let pm = config.mutation_prob_per_param.unwrap_or(1.0 / d as f64);
    let eta = config.distribution_index;
    let crossover = rng.random::<f64>() < config.crossover_prob;
    space
        .iter()
        .map(|(name, dist)| {
            let (pa, pb) = (&a[name], &b[name]);
            let value = match dist {
                Distribution::Categorical { .. } => {
                    let mut v = if crossover && rng.random::<bool>() {
                        pb.clone()
                    } else {
                        pa.clone()
                    };
                    if rng.random::<f64>() < pm {
                        v = sample_distribution(dist, rng);
                    }
                    v
                }
                _ => {
                    let (lo, hi) = dist.internal_bounds().expect("numeric");
                    let xa = dist.to_internal(pa).expect("numeric");
                    let xb = dist.to_internal(pb).expect("numeric");
                    let mut x = if crossover && rng.random::<bool>() {
                        sbx(xa, xb, eta, rng)
                    } else {
                        xa
                    };
                    if rng.random::<f64>() < pm {
                        x = polynomial_mutation(x, lo, hi, eta, rng);
                    }
                    dist.from_internal(x)
                }
            };
            (name.to_owned(), value)
        })
        .collect()
}

fn binary_tournament(fit: &[Fitness], rng: &mut impl Rng) -> usize {
    let i = rng.random_range(0..fit.len());
    let j = rng.random_range(0..fit.len());
    if tournament_winner(fit[i], fit[j]) {
        i
    } else {
        j
    }
}

pub fn nsga2_ask(
    space: &SearchSpace,
    trials: &[Trial],
    trial_id: u64,
    directions: &[Direction],
    config: &Nsga2Config,
    rng: &mut impl Rng,
) -> Params {
    let population = parent_population(trials, trial_id, directions, config.population_size);
    if population.is_empty() {
        return random_sample(space, rng);
    }
    let values: Vec<Vec<f64>> = population
        .iter()
        .map(|t| t.values.clone().expect("complete"))
        .collect();
    let fit = fitness(&values, directions);
    let first = binary_tournament(&fit, rng);
    let second = binary_tournament(&fit, rng);
    let (pa, pb) = (&population[first].params, &population[second].params);
    make_child(space, pa, pb, config, rng)
}

#[derive(Debug, Clone, Default)]
pub struct Nsga2Sampler {
    config: Nsga2Config,
}

impl Nsga2Sampler {
    pub const NAME: &'static str = "samplers/nsga2";

    pub fn new(config: Nsga2Config) -> Result<Self, SamplerError> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &Nsga2Config {
        &self.config
    }
}

impl Sampler for Nsga2Sampler {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn validate(&self, _space: &SearchSpace, directions: &[Direction]) -> Result<(), SamplerError> {
        if directions.len() < 2 {
            return Err(SamplerError::Configuration(
                "nsga2 needs at least two objectives; use tpe or nelder_mead".into(),
            ));
        }
        Ok(())
    }

    fn ask(&mut self, ctx: &AskContext<'_>) -> Result<Params, SamplerError> {
        self.validate(ctx.search_space, ctx.directions)?;
        let mut rng = ctx.rng();
        if ctx.trial_id < self.config.population_size as u64 {
            return Ok(random_sample(ctx.search_space, &mut rng));
        }
        Ok(nsga2_ask(
            ctx.search_space,
            ctx.trials,
            ctx.trial_id,
            ctx.directions,
            &self.config,
            &mut rng,
        ))
    }
}
