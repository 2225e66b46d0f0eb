//! Bounded Nelder–Mead simplex search driven through ask/tell.
//!
//! [`NelderMeadState`] is an explicit state machine: it always holds exactly
//! one pending point and advances when that point's value is observed. The
//! sampler rebuilds the machine from the study history on every ask, so its
//! output is a pure function of `(seed, history)` and survives journal replay.

use rand::Rng;

use crate::num::Real;
use crate::sampler::{derived_rng, AskContext, Sampler, SamplerError};
use crate::samplers::random::random_sample;
use crate::space::{Direction, Distribution, Params, SearchSpace};
use crate::trial::TrialState;

/// Reflection, expansion, contraction and shrink coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients<T> {
    pub reflection: T,
    pub expansion: T,
    pub contraction: T,
    pub shrink: T,
}

impl<T: Real> Default for Coefficients<T> {
    fn default() -> Self {
        Self {
            reflection: T::one(),
            expansion: T::lit(2.0),
            contraction: T::lit(0.5),
            shrink: T::lit(0.5),
        }
    }
}

/// Initial vertex `i` offsets coordinate `i` of the seed point by this
/// fraction of the coordinate's range.
pub const INITIAL_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Init,
    Reflect,
    Expand,
    Contract,
    Shrink,
}

#[derive(Debug, Clone)]
pub struct NelderMeadState<T: Real> {
    lower: Vec<T>,
    upper: Vec<T>,
    coef: Coefficients<T>,
    simplex: Vec<(Vec<T>, T)>,
    phase: Phase,
    pending: Vec<T>,
    init_queue: Vec<Vec<T>>,
    centroid: Vec<T>,
    reflected: Option<(Vec<T>, T)>,
    inside_contraction: bool,
    shrink_queue: Vec<Vec<T>>,
    shrink_slot: usize,
}

impl<T: Real> NelderMeadState<T> {
    /// Starts from `start`; the first `d + 1` proposals are the initial
    /// simplex vertices.
    pub fn new(start: Vec<T>, lower: Vec<T>, upper: Vec<T>, coef: Coefficients<T>) -> Self {
        let d = start.len();
        assert!(d > 0 && lower.len() == d && upper.len() == d);
        let seed_point = clip(&start, &lower, &upper);
        let step = T::lit(INITIAL_STEP);
        let mut init_queue: Vec<Vec<T>> = (0..d)
            .map(|i| {
                let mut v = seed_point.clone();
                let delta = step * (upper[i] - lower[i]);
                v[i] = if v[i] + delta <= upper[i] {
                    v[i] + delta
                } else {
                    v[i] - delta
                };
                v
            })
            .collect();
        init_queue.reverse();
        Self {
            lower,
            upper,
            coef,
            simplex: Vec::with_capacity(d + 1),
            phase: Phase::Init,
            pending: seed_point,
            init_queue,
            centroid: Vec::new(),
            reflected: None,
            inside_contraction: false,
            shrink_queue: Vec::new(),
            shrink_slot: 0,
        }
    }

    /// Resumes from an already evaluated simplex of `d + 1` vertices.
    pub fn from_simplex(
        simplex: Vec<(Vec<T>, T)>,
        lower: Vec<T>,
        upper: Vec<T>,
        coef: Coefficients<T>,
    ) -> Self {
        let d = lower.len();
        assert!(d > 0 && simplex.len() == d + 1 && upper.len() == d);
        let mut state = Self {
            lower,
            upper,
            coef,
            simplex,
            phase: Phase::Init,
            pending: Vec::new(),
            init_queue: Vec::new(),
            centroid: Vec::new(),
            reflected: None,
            inside_contraction: false,
            shrink_queue: Vec::new(),
            shrink_slot: 0,
        };
        state.begin_iteration();
        state
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Point awaiting evaluation.
    pub fn pending(&self) -> &[T] {
        &self.pending
    }

    /// Evaluated vertices, best first once initialized.
    pub fn simplex(&self) -> &[(Vec<T>, T)] {
        &self.simplex
    }

    pub fn best(&self) -> Option<&(Vec<T>, T)> {
        self.simplex
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    }

    /// Feeds the value of [`Self::pending`] (minimization; use `+inf` for a
    /// failed evaluation) and moves to the next proposal.
    pub fn observe(&mut self, value: T) {
        let value = if value.is_nan() { T::infinity() } else { value };
        let point = std::mem::take(&mut self.pending);
        let d = self.dimension();
        match self.phase {
            Phase::Init => {
                self.simplex.push((point, value));
                match self.init_queue.pop() {
                    Some(next) => self.pending = next,
                    None => self.begin_iteration(),
                }
            }
            Phase::Reflect => {
                let best = self.simplex[0].1;
                let second_worst = self.simplex[d - 1].1;
                let worst = self.simplex[d].1;
                if value < best {
                    self.pending = self.toward(&point, self.coef.expansion);
                    self.reflected = Some((point, value));
                    self.phase = Phase::Expand;
                } else if value < second_worst {
                    self.simplex[d] = (point, value);
                    self.begin_iteration();
                } else {
                    self.inside_contraction = value >= worst;
                    let target = if self.inside_contraction {
                        self.simplex[d].0.clone()
                    } else {
                        point.clone()
                    };
                    self.pending = self.toward(&target, self.coef.contraction);
                    self.reflected = Some((point, value));
                    self.phase = Phase::Contract;
                }
            }
            Phase::Expand => {
                let reflected = self.reflected.take().expect("set when expanding");
                self.simplex[d] = if value < reflected.1 {
                    (point, value)
                } else {
                    reflected
                };
                self.begin_iteration();
            }
            Phase::Contract => {
                let reflected = self.reflected.take().expect("set when contracting");
                let accept = if self.inside_contraction {
                    value < self.simplex[d].1
                } else {
                    value <= reflected.1
                };
                if accept {
                    self.simplex[d] = (point, value);
                    self.begin_iteration();
                } else {
                    let best = self.simplex[0].0.clone();
                    self.shrink_queue = self.simplex[1..]
                        .iter()
                        .rev()
                        .map(|(v, _)| {
                            let p: Vec<T> = best
                                .iter()
                                .zip(v)
                                .map(|(&b, &x)| b + self.coef.shrink * (x - b))
                                .collect();
                            clip(&p, &self.lower, &self.upper)
                        })
                        .collect();
                    self.shrink_slot = 1;
                    self.phase = Phase::Shrink;
                    self.pending = self.shrink_queue.pop().expect("d >= 1");
                }
            }
            Phase::Shrink => {
                self.simplex[self.shrink_slot] = (point, value);
                self.shrink_slot += 1;
                match self.shrink_queue.pop() {
                    Some(next) => self.pending = next,
                    None => self.begin_iteration(),
                }
            }
        }
    }

    /// `centroid + coef * (target - centroid)`, clipped.
    fn toward(&self, target: &[T], coef: T) -> Vec<T> {
        let p: Vec<T> = self
            .centroid
            .iter()
            .zip(target)
            .map(|(&c, &t)| c + coef * (t - c))
            .collect();
        clip(&p, &self.lower, &self.upper)
    }

    fn begin_iteration(&mut self) {
        let d = self.dimension();
        self.simplex
            .sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let inv = T::one() / T::lit(d as f64);
        self.centroid = (0..d)
            .map(|k| self.simplex[..d].iter().fold(T::zero(), |acc, (v, _)| acc + v[k]) * inv)
            .collect();
        let worst = self.simplex[d].0.clone();
        let reflected: Vec<T> = self
            .centroid
            .iter()
            .zip(&worst)
            .map(|(&c, &w)| c + self.coef.reflection * (c - w))
            .collect();
        self.pending = clip(&reflected, &self.lower, &self.upper);
        self.phase = Phase::Reflect;
    }
}

fn clip<T: Real>(p: &[T], lower: &[T], upper: &[T]) -> Vec<T> {
    p.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&x, (&lo, &hi))| x.max(lo).min(hi))
        .collect()
}

/// Sampler wrapping [`NelderMeadState`] for float-only, single-objective
/// studies.
#[derive(Debug, Clone, Default)]
pub struct NelderMeadSampler {
    coef: Coefficients<f64>,
}

impl NelderMeadSampler {
    pub const NAME: &'static str = "samplers/nelder_mead";

    pub fn new() -> Self {
        Self::default()
    }
}

fn float_bounds(space: &SearchSpace) -> Result<Vec<(f64, f64)>, SamplerError> {
    space
        .iter()
        .map(|(name, dist)| match dist {
            Distribution::Float { .. } => Ok(dist.internal_bounds().expect("numeric")),
            _ => Err(SamplerError::UnsupportedSpace(format!(
                "nelder-mead handles float parameters only; `{name}` is {dist}"
            ))),
        })
        .collect()
}

fn to_params(space: &SearchSpace, point: &[f64]) -> Params {
    space
        .iter()
        .zip(point)
        .map(|((name, dist), &x)| (name.to_owned(), dist.from_internal(x)))
        .collect()
}

impl Sampler for NelderMeadSampler {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn validate(&self, space: &SearchSpace, directions: &[Direction]) -> Result<(), SamplerError> {
        if directions.len() != 1 {
            return Err(SamplerError::Configuration(
                "nelder-mead is single-objective".into(),
            ));
        }
        float_bounds(space).map(|_| ())
    }

    fn ask(&mut self, ctx: &AskContext<'_>) -> Result<Params, SamplerError> {
        self.validate(ctx.search_space, ctx.directions)?;
        let bounds = float_bounds(ctx.search_space)?;
        if bounds.is_empty() {
            return Ok(Params::new());
        }
        let direction = ctx.directions[0];
        let (lower, upper): (Vec<f64>, Vec<f64>) = bounds.iter().copied().unzip();
        let mut start_rng = derived_rng(ctx.seed, u64::MAX);
        let start = bounds
            .iter()
            .map(|&(lo, hi)| if lo == hi { lo } else { start_rng.random_range(lo..=hi) })
            .collect();
        let mut machine = NelderMeadState::new(start, lower, upper, self.coef);
        for trial in ctx.trials.iter().take_while(|t| t.id < ctx.trial_id) {
            if trial.state == TrialState::Running {
                // The machine is waiting on an unfinished evaluation.
                return Ok(random_sample(ctx.search_space, &mut ctx.rng()));
            }
            if trial.params != to_params(ctx.search_space, machine.pending()) {
                continue;
            }
            let value = match trial.value() {
                Some(v) if trial.is_complete() => direction.to_minimization(v),
                _ => f64::INFINITY,
            };
            machine.observe(value);
        }
        Ok(to_params(ctx.search_space, machine.pending()))
    }
}
