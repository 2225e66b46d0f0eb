use bbohub_core::samplers::{
    AutoSampler, NelderMeadSampler, Nsga2Config, Nsga2Sampler, RandomSampler, TpeConfig,
    TpeSampler,
};
use bbohub_core::samplers::tpe::tpe_split;
use bbohub_core::samplers::nelder_mead::{Coefficients, NelderMeadState};
use bbohub_core::{Direction, Distribution, ParamValue, Params, Sampler, SearchSpace, Study, StudyConfig, Trial, TrialState};
use proptest::prelude::*;

fn distribution() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (-100.0f64..100.0, 0.001f64..50.0).prop_map(|(lo, w)| Distribution::float(lo, lo + w)),
        (1e-4f64..1.0, 1.0f64..1e4).prop_map(|(lo, k)| Distribution::log_float(lo, lo * k)),
        (-50i64..50, 0i64..20).prop_map(|(lo, w)| Distribution::int(lo, lo + w)),
        (1usize..5).prop_map(|k| Distribution::categorical((0..k).map(|i| format!("c{i}")))),
    ]
}

fn space() -> impl Strategy<Value = SearchSpace> {
    prop::collection::vec(distribution(), 1..5).prop_map(|dists| {
        let mut s = SearchSpace::new();
        for (i, d) in dists.into_iter().enumerate() {
            s.add(format!("p{i}"), d).unwrap();
        }
        s
    })
}

fn float_space() -> impl Strategy<Value = SearchSpace> {
    prop::collection::vec((-10.0f64..10.0, 0.01f64..20.0), 1..5).prop_map(|b| {
        let mut s = SearchSpace::new();
        for (i, (lo, w)) in b.into_iter().enumerate() {
            s.add(format!("x{i}"), Distribution::float(lo, lo + w)).unwrap();
        }
        s
    })
}

// Deterministic synthetic objective over any parameter kinds.
fn score(params: &Params, k: usize) -> Vec<f64> {
    let s: f64 = params
        .values()
        .map(|v| match v {
            ParamValue::Categorical(c) => c.len() as f64,
            other => other.as_f64().unwrap().sin(),
        })
        .sum();
    (0..k).map(|i| (s + i as f64).powi(2)).collect()
}

fn drive(space: &SearchSpace, sampler: Box<dyn Sampler>, n_obj: usize, seed: u64, n: usize) -> Study {
    let study = Study::create(StudyConfig::new(
        vec![Direction::Minimize; n_obj],
        space.clone(),
        seed,
        sampler,
    ))
    .unwrap();
    for _ in 0..n {
        let t = study.ask().unwrap();
        study.tell(t.id, score(&t.params, n_obj)).unwrap();
    }
    study
}

fn small_tpe() -> Box<dyn Sampler> {
    Box::new(TpeSampler::new(TpeConfig { n_startup: 3, ..Default::default() }).unwrap())
}

fn small_nsga() -> Box<dyn Sampler> {
    Box::new(Nsga2Sampler::new(Nsga2Config { population_size: 4, ..Default::default() }).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn proposals_stay_in_space(space in space(), seed in any::<u64>()) {
        for (sampler, k) in [
            (Box::new(RandomSampler) as Box<dyn Sampler>, 1),
            (small_tpe(), 1),
            (small_nsga(), 2),
            (Box::new(AutoSampler::default()), 1),
        ] {
            let study = drive(&space, sampler, k, seed, 16);
            for t in study.trials() {
                prop_assert!(space.check(&t.params).is_ok(), "{:?}", t.params);
                prop_assert_eq!(t.state, TrialState::Complete);
            }
        }
    }

    #[test]
    fn nelder_mead_stays_in_float_space(space in float_space(), seed in any::<u64>()) {
        let study = drive(&space, Box::new(NelderMeadSampler::new()), 1, seed, 40);
        for t in study.trials() {
            prop_assert!(space.check(&t.params).is_ok(), "{:?}", t.params);
        }
    }

    #[test]
    fn same_seed_same_journal(space in space(), seed in any::<u64>()) {
        for (make, k) in [
            (small_tpe as fn() -> Box<dyn Sampler>, 1),
            (small_nsga, 2),
            (|| Box::new(RandomSampler) as Box<dyn Sampler>, 1),
        ] {
            let a = drive(&space, make(), k, seed, 12).journal();
            let b = drive(&space, make(), k, seed, 12).journal();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn split_sizes_and_order(values in prop::collection::vec(-1e3f64..1e3, 1..80), gamma in 0.01f64..0.99, maximize in any::<bool>()) {
        let dir = if maximize { Direction::Maximize } else { Direction::Minimize };
        let trials: Vec<Trial> = values.iter().enumerate().map(|(i, v)| Trial {
            id: i as u64,
            params: Params::new(),
            state: TrialState::Complete,
            values: Some(vec![*v]),
        }).collect();
        let refs: Vec<&Trial> = trials.iter().collect();
        let (good, bad) = tpe_split(&refs, dir, gamma);
        prop_assert_eq!(good.len(), (gamma * values.len() as f64).ceil() as usize);
        prop_assert_eq!(good.len() + bad.len(), values.len());
        for g in &good {
            for b in &bad {
                prop_assert!(!dir.is_better(b.value().unwrap(), g.value().unwrap()));
            }
        }
    }

    #[test]
    fn nelder_mead_best_never_worsens(
        centre in prop::collection::vec(-3.0f64..3.0, 1..5),
        start_frac in 0.0f64..1.0,
    ) {
        let d = centre.len();
        let start = vec![-5.0 + 10.0 * start_frac; d];
        let mut nm = NelderMeadState::new(start, vec![-5.0; d], vec![5.0; d], Coefficients::default());
        let mut best = f64::INFINITY;
        for _ in 0..150 {
            let x = nm.pending().to_vec();
            let fx: f64 = x.iter().zip(&centre).map(|(a, c)| (a - c).powi(2)).sum();
            nm.observe(fx);
            if let Some((_, b)) = nm.best() {
                prop_assert!(*b <= best);
                best = *b;
            }
            prop_assert!(nm.pending().iter().all(|v| (-5.0..=5.0).contains(v)));
        }
    }
}

#[test]
fn differing_seeds_diverge() {
    let space = SearchSpace::new().with("x", Distribution::float(0.0, 1.0)).unwrap();
    let a = drive(&space, Box::new(RandomSampler), 1, 1, 5).trials();
    let b = drive(&space, Box::new(RandomSampler), 1, 2, 5).trials();
    assert_ne!(a, b);
}
