//! Tree-structured Parzen estimator over independent per-parameter densities.

use std::cmp::Ordering;

use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::sampler::{AskContext, Sampler, SamplerError};
use crate::samplers::random::random_sample;
use crate::space::{Direction, Distribution, ParamValue, Params, SearchSpace};
use crate::trial::Trial;

#[derive(Debug, Clone, PartialEq)]
pub struct TpeConfig {
    /// Fraction of completed trials treated as "good".
    pub gamma_fraction: f64,
    pub n_candidates: usize,
    pub n_startup: usize,
    /// Lower bound on kernel bandwidth, as a fraction of the parameter range.
    pub bandwidth_floor: f64,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self {
            gamma_fraction: 0.10,
            n_candidates: 24,
            n_startup: 10,
            bandwidth_floor: 1e-3,
        }
    }
}

impl TpeConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |m: &str| Err(SamplerError::Configuration(m.into()));
        if !(self.gamma_fraction > 0.0 && self.gamma_fraction < 1.0) {
            return bad("gamma_fraction must lie in (0, 1)");
        }
        if self.n_candidates == 0 {
            return bad("n_candidates must be positive");
        }
        if self.n_startup == 0 {
            return bad("n_startup must be positive");
        }
        if !(self.bandwidth_floor > 0.0 && self.bandwidth_floor.is_finite()) {
            return bad("bandwidth_floor must be positive");
        }
        Ok(())
    }
}

/// Splits completed single-objective trials into the best
/// `ceil(gamma_fraction * n)` and the rest. Ties keep trial-id order.
pub fn tpe_split<'a>(
    trials: &[&'a Trial],
    direction: Direction,
    gamma_fraction: f64,
) -> (Vec<&'a Trial>, Vec<&'a Trial>) {
    let mut sorted: Vec<&Trial> = trials.to_vec();
    sorted.sort_by(|a, b| {
        let (va, vb) = (
            direction.to_minimization(a.value().unwrap_or(f64::INFINITY)),
            direction.to_minimization(b.value().unwrap_or(f64::INFINITY)),
        );
        va.partial_cmp(&vb).unwrap_or(Ordering::Equal).then(a.id.cmp(&b.id))
    });
    let n_good = ((gamma_fraction * sorted.len() as f64).ceil() as usize).min(sorted.len());
    let bad = sorted.split_off(n_good);
    (sorted, bad)
}

/// Mixture of equally weighted Gaussians truncated to `[low, high]`, plus one
/// uniform prior component over the range.
#[derive(Debug, Clone)]
pub struct TruncatedKde {
    centers: Vec<f64>,
    bandwidth: f64,
    low: f64,
    high: f64,
}

impl TruncatedKde {
    /// Kernels at `centers` with bandwidth `max(Scott's rule, floor * range)`.
    /// With no observations the density is uniform on the range.
    pub fn fit(centers: Vec<f64>, low: f64, high: f64, floor_fraction: f64) -> Self {
        let range = high - low;
        let n = centers.len() as f64;
        // The prior counts as one pseudo-observation at the middle of the range.
        let mid = 0.5 * (low + high);
        let m = n + 1.0;
        let mean = (centers.iter().sum::<f64>() + mid) / m;
        let var = (centers.iter().map(|c| (c - mean).powi(2)).sum::<f64>() + (mid - mean).powi(2)) / m;
        let scott = 1.06 * var.sqrt() * m.powf(-0.2);
        let bandwidth = scott.max(floor_fraction * range).max(f64::MIN_POSITIVE);
        Self {
            centers,
            bandwidth,
            low,
            high,
        }
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if self.centers.is_empty() || self.high <= self.low {
            return if self.high > self.low {
                1.0 / (self.high - self.low)
            } else {
                1.0
            };
        }
        let range = self.high - self.low;
        let uniform = if (self.low..=self.high).contains(&x) { 1.0 / range } else { 0.0 };
        let total: f64 = self
            .centers
            .iter()
            .map(|&c| {
                let k = Normal::new(c, self.bandwidth).expect("positive bandwidth");
                let mass = k.cdf(self.high) - k.cdf(self.low);
                if mass > 0.0 {
                    k.pdf(x) / mass
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            + uniform;
        total / (self.centers.len() + 1) as f64
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.high <= self.low {
            return self.low;
        }
        if self.centers.is_empty() {
            return rng.random_range(self.low..=self.high);
        }
        let pick = rng.random_range(0..=self.centers.len());
        if pick == self.centers.len() {
            return rng.random_range(self.low..=self.high);
        }
        let c = self.centers[pick];
        let k = Normal::new(c, self.bandwidth).expect("positive bandwidth");
        let (a, b) = (k.cdf(self.low), k.cdf(self.high));
        let x = if b > a {
            k.inverse_cdf(a + rng.random::<f64>() * (b - a))
        } else {
            c
        };
        if x.is_finite() {
            x.clamp(self.low, self.high)
        } else {
            c.clamp(self.low, self.high)
        }
    }
}

/// Laplace-smoothed categorical frequencies: `(count + 1) / (n + k)`.
pub fn categorical_weights(choices: &[String], observed: &[&str]) -> Vec<f64> {
    let denom = (observed.len() + choices.len()) as f64;
    choices
        .iter()
        .map(|c| (observed.iter().filter(|o| **o == c.as_str()).count() + 1) as f64 / denom)
        .collect()
}

enum Model {
    Numeric { good: TruncatedKde, bad: TruncatedKde },
    Categorical { good: Vec<f64>, bad: Vec<f64> },
}

fn build_models(
    space: &SearchSpace,
    good: &[&Trial],
    bad: &[&Trial],
    floor: f64,
) -> Vec<Model> {
    space
        .iter()
        .map(|(name, dist)| match dist {
            Distribution::Categorical { choices } => {
                let obs = |set: &[&Trial]| -> Vec<String> {
                    set.iter()
                        .filter_map(|t| t.params.get(name).and_then(|v| v.as_str()).map(str::to_owned))
                        .collect()
                };
                let (g, b) = (obs(good), obs(bad));
                let g: Vec<&str> = g.iter().map(String::as_str).collect();
                let b: Vec<&str> = b.iter().map(String::as_str).collect();
                Model::Categorical {
                    good: categorical_weights(choices, &g),
                    bad: categorical_weights(choices, &b),
                }
            }
            _ => {
                let (lo, hi) = dist.internal_bounds().expect("numeric");
                let centers = |set: &[&Trial]| -> Vec<f64> {
                    set.iter()
                        .filter_map(|t| t.params.get(name).and_then(|v| dist.to_internal(v)))
                        .collect()
                };
                Model::Numeric {
                    good: TruncatedKde::fit(centers(good), lo, hi, floor),
                    bad: TruncatedKde::fit(centers(bad), lo, hi, floor),
                }
            }
        })
        .collect()
}

fn pick_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// One TPE suggestion. Falls back to random sampling while fewer than
/// `n_startup` trials are complete.
pub fn tpe_ask<R: Rng + ?Sized>(
    space: &SearchSpace,
    history: &[&Trial],
    direction: Direction,
    config: &TpeConfig,
    rng: &mut R,
) -> Params {
    if history.len() < config.n_startup {
        return random_sample(space, rng);
    }
    let (good, bad) = tpe_split(history, direction, config.gamma_fraction);
    let models = build_models(space, &good, &bad, config.bandwidth_floor);
    let mut best: Option<(f64, Params)> = None;
    for _ in 0..config.n_candidates {
        let mut params = Params::new();
        let mut score = 0.0;
        for ((name, dist), model) in space.iter().zip(&models) {
            let value = match (model, dist) {
                (Model::Categorical { good, bad }, Distribution::Categorical { choices }) => {
                    let i = pick_weighted(good, rng);
                    score += good[i].ln() - bad[i].ln();
                    ParamValue::Categorical(choices[i].clone())
                }
                (Model::Numeric { good, bad }, _) => {
                    let value = dist.from_internal(good.sample(rng));
                    let x = dist.to_internal(&value).expect("numeric");
                    score += good.pdf(x).max(f64::MIN_POSITIVE).ln()
                        - bad.pdf(x).max(f64::MIN_POSITIVE).ln();
                    value
                }
                _ => unreachable!("models follow the space"),
            };
            params.insert(name.to_owned(), value);
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, params));
        }
    }
    best.expect("n_candidates >= 1").1
}

#[derive(Debug, Clone, Default)]
pub struct TpeSampler {
    config: TpeConfig,
}

impl TpeSampler {
    pub const NAME: &'static str = "samplers/tpe";

    pub fn new(config: TpeConfig) -> Result<Self, SamplerError> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &TpeConfig {
        &self.config
    }
}

impl Sampler for TpeSampler {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn validate(&self, _space: &SearchSpace, directions: &[Direction]) -> Result<(), SamplerError> {
        if directions.len() != 1 {
            return Err(SamplerError::Configuration("tpe is single-objective".into()));
        }
        Ok(())
    }

    fn ask(&mut self, ctx: &AskContext<'_>) -> Result<Params, SamplerError> {
        self.validate(ctx.search_space, ctx.directions)?;
        let history: Vec<&Trial> = ctx.completed().collect();
        Ok(tpe_ask(
            ctx.search_space,
            &history,
            ctx.directions[0],
            &self.config,
            &mut ctx.rng(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::derived_rng;
    use crate::trial::TrialState;

    fn done(id: u64, v: f64) -> Trial {
        Trial {
            id,
            params: Params::new(),
            state: TrialState::Complete,
            values: Some(vec![v]),
        }
    }

    #[test]
    fn split_sizes_follow_ceil_rule() {
        let trials: Vec<Trial> = (0..25).map(|i| done(i, (25 - i) as f64)).collect();
        let refs: Vec<&Trial> = trials.iter().collect();
        assert_eq!(tpe_split(&refs[..10], Direction::Minimize, 0.1).0.len(), 1);
        assert_eq!(tpe_split(&refs, Direction::Minimize, 0.1).0.len(), 3);
        let (g, b) = tpe_split(&refs[..1], Direction::Minimize, 0.1);
        assert_eq!((g.len(), b.len()), (1, 0));
    }

    #[test]
    fn split_respects_direction() {
        let trials = [done(0, 1.0), done(1, 5.0), done(2, 3.0)];
        let refs: Vec<&Trial> = trials.iter().collect();
        assert_eq!(tpe_split(&refs, Direction::Minimize, 0.3).0[0].id, 0);
        assert_eq!(tpe_split(&refs, Direction::Maximize, 0.3).0[0].id, 1);
    }

    #[test]
    fn laplace_weights() {
        let choices = vec!["a".to_string(), "b".to_string()];
        let w = categorical_weights(&choices, &["a", "a", "a"]);
        assert_eq!(w, vec![4.0 / 5.0, 1.0 / 5.0]);
    }

    #[test]
    fn kde_integrates_to_one_on_range() {
        let kde = TruncatedKde::fit(vec![-4.9, 0.3, 2.0], -5.0, 5.0, 1e-3);
        let n = 20_000;
        let h = 10.0 / n as f64;
        let integral: f64 = (0..n).map(|i| kde.pdf(-5.0 + (i as f64 + 0.5) * h) * h).sum();
        assert!((integral - 1.0).abs() < 1e-3, "{integral}");
    }

    #[test]
    fn kde_bandwidth_floor() {
        let kde = TruncatedKde::fit(vec![0.5, 0.5], 0.0, 1.0, 0.25);
        assert_eq!(kde.bandwidth(), 0.25);
    }

    #[test]
    fn kde_scott_bandwidth_counts_prior() {
        // Points {-1, 1} plus the midpoint 0: variance 2/3 over three samples.
        let kde = TruncatedKde::fit(vec![-1.0, 1.0], -1.0, 1.0, 1e-3);
        let expected = 1.06 * (2.0f64 / 3.0).sqrt() * 3f64.powf(-0.2);
        assert!((kde.bandwidth() - expected).abs() < 1e-12);
    }

    #[test]
    fn kde_samples_stay_in_range() {
        let kde = TruncatedKde::fit(vec![4.99, 5.0], -5.0, 5.0, 1e-3);
        let mut rng = derived_rng(0, 0);
        for _ in 0..1000 {
            let x = kde.sample(&mut rng);
            assert!((-5.0..=5.0).contains(&x));
        }
    }

    #[test]
    fn startup_falls_back_to_random() {
        let space = SearchSpace::new()
            .with("x", Distribution::float(0.0, 1.0))
            .unwrap();
        let trials: Vec<Trial> = (0..5).map(|i| done(i, i as f64)).collect();
        let refs: Vec<&Trial> = trials.iter().collect();
        let a = tpe_ask(&space, &refs, Direction::Minimize, &TpeConfig::default(), &mut derived_rng(3, 9));
        let b = random_sample(&space, &mut derived_rng(3, 9));
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(TpeSampler::new(TpeConfig { gamma_fraction: 1.0, ..Default::default() }).is_err());
        assert!(TpeSampler::new(TpeConfig { n_candidates: 0, ..Default::default() }).is_err());
        assert!(TpeSampler::new(TpeConfig::default()).is_ok());
    }
}
