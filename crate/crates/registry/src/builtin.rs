//! Compiled-in samplers and benchmarks addressable from manifests.

use bbohub_core::benchmarks::BenchmarkSpec;
use bbohub_core::samplers::{
    AutoSampler, NelderMeadSampler, Nsga2Config, Nsga2Sampler, RandomSampler, TpeConfig,
    TpeSampler,
};
use bbohub_core::{Bbob, BiSphere, Problem, Sampler};
use serde_json::{Map, Value};

use crate::refs::Category;

pub const SAMPLERS: [&str; 5] = ["random", "nelder_mead", "tpe", "nsga2", "auto_sampler"];
pub const BENCHMARKS: [&str; 2] = ["bbob", "bi_sphere"];

pub fn kind_of(id: &str) -> Option<Category> {
    if SAMPLERS.contains(&id) {
        Some(Category::Samplers)
    } else if BENCHMARKS.contains(&id) {
        Some(Category::Benchmarks)
    } else {
        None
    }
}

struct Args<'a> {
    id: &'a str,
    params: &'a Map<String, Value>,
}

impl Args<'_> {
    fn allow(&self, keys: &[&str]) -> Result<(), String> {
        match self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            None => Ok(()),
            Some(k) if keys.is_empty() => Err(format!("`{}` takes no parameters, got `{k}`", self.id)),
            Some(k) => Err(format!(
                "`{}` has no parameter `{k}` (known: {})",
                self.id,
                keys.join(", ")
            )),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, String> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| format!("`{key}` must be a number, got {v}")),
        }
    }

    fn u64(&self, key: &str) -> Result<Option<u64>, String> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => match (v.as_u64(), v.as_f64()) {
                (Some(n), _) => Ok(Some(n)),
                (None, Some(x)) if x >= 0.0 && x.fract() == 0.0 && x < 9.0e15 => Ok(Some(x as u64)),
                _ => Err(format!("`{key}` must be a non-negative integer, got {v}")),
            },
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, String> {
        Ok(self.u64(key)?.map(|n| n as usize))
    }
}

const TPE_KEYS: [&str; 4] = ["gamma_fraction", "n_candidates", "n_startup", "bandwidth_floor"];
const NSGA2_KEYS: [&str; 4] = [
    "population_size",
    "crossover_prob",
    "mutation_prob_per_param",
    "distribution_index",
];

fn tpe_config(a: &Args) -> Result<TpeConfig, String> {
    let d = TpeConfig::default();
    Ok(TpeConfig {
        gamma_fraction: a.f64("gamma_fraction")?.unwrap_or(d.gamma_fraction),
        n_candidates: a.usize("n_candidates")?.unwrap_or(d.n_candidates),
        n_startup: a.usize("n_startup")?.unwrap_or(d.n_startup),
        bandwidth_floor: a.f64("bandwidth_floor")?.unwrap_or(d.bandwidth_floor),
    })
}

fn nsga2_config(a: &Args) -> Result<Nsga2Config, String> {
    let d = Nsga2Config::default();
    Ok(Nsga2Config {
        population_size: a.usize("population_size")?.unwrap_or(d.population_size),
        crossover_prob: a.f64("crossover_prob")?.unwrap_or(d.crossover_prob),
        mutation_prob_per_param: a.f64("mutation_prob_per_param")?.or(d.mutation_prob_per_param),
        distribution_index: a.f64("distribution_index")?.unwrap_or(d.distribution_index),
    })
}

pub fn make_sampler(id: &str, params: &Map<String, Value>) -> Result<Box<dyn Sampler>, String> {
    let a = Args { id, params };
    let sampler: Box<dyn Sampler> = match id {
        "random" => {
            a.allow(&[])?;
            Box::new(RandomSampler)
        }
        "nelder_mead" => {
            a.allow(&[])?;
            Box::new(NelderMeadSampler::new())
        }
        "tpe" => {
            a.allow(&TPE_KEYS)?;
            Box::new(TpeSampler::new(tpe_config(&a)?).map_err(|e| e.to_string())?)
        }
        "nsga2" => {
            a.allow(&NSGA2_KEYS)?;
            Box::new(Nsga2Sampler::new(nsga2_config(&a)?).map_err(|e| e.to_string())?)
        }
        "auto_sampler" => {
            let keys: Vec<&str> = TPE_KEYS.iter().chain(&NSGA2_KEYS).copied().collect();
            a.allow(&keys)?;
            Box::new(AutoSampler::new(tpe_config(&a)?, nsga2_config(&a)?).map_err(|e| e.to_string())?)
        }
        other => return Err(format!("unknown builtin sampler `{other}`")),
    };
    Ok(sampler)
}

pub fn make_problem(id: &str, params: &Map<String, Value>) -> Result<Box<dyn Problem>, String> {
    let a = Args { id, params };
    match id {
        "bbob" => {
            a.allow(&["function_id", "dimension", "instance"])?;
            let fid = a.u64("function_id")?.unwrap_or(1);
            let fid = u32::try_from(fid).map_err(|_| format!("function_id {fid} out of range"))?;
            let spec = BenchmarkSpec::new(
                fid,
                a.usize("dimension")?.unwrap_or(2),
                a.u64("instance")?.unwrap_or(0),
            );
            Ok(Box::new(Bbob::new(spec).map_err(|e| e.to_string())?))
        }
        "bi_sphere" => {
            a.allow(&["dimension", "offset"])?;
            let p = BiSphere::new(a.usize("dimension")?.unwrap_or(2), a.f64("offset")?.unwrap_or(1.0))
                .map_err(|e| e.to_string())?;
            Ok(Box::new(p))
        }
        other => Err(format!("unknown builtin benchmark `{other}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn map(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn every_id_binds_with_no_params() {
        for id in SAMPLERS {
            assert_eq!(make_sampler(id, &Map::new()).unwrap().name(), format!("samplers/{id}"));
        }
        for id in BENCHMARKS {
            assert!(make_problem(id, &Map::new()).is_ok());
        }
    }

    #[test]
    fn bbob_parameters() {
        let p = make_problem("bbob", &map(json!({"function_id": 1, "dimension": 2}))).unwrap();
        assert_eq!(p.search_space().len(), 2);
        assert!(make_problem("bbob", &map(json!({"function_id": 5}))).is_err());
        assert!(make_problem("bbob", &map(json!({"dim": 2}))).is_err());
        assert!(make_problem("bbob", &map(json!({"dimension": "two"}))).is_err());
        assert!(make_problem("bbob", &map(json!({"dimension": 3.0}))).is_ok());
    }

    #[test]
    fn sampler_parameters_are_validated() {
        assert!(make_sampler("tpe", &map(json!({"n_startup": 3}))).is_ok());
        assert!(make_sampler("tpe", &map(json!({"gamma_fraction": 2.0}))).is_err());
        assert!(make_sampler("random", &map(json!({"seed": 1}))).is_err());
        assert!(make_sampler("nsga2", &map(json!({"population_size": 8}))).is_ok());
        assert!(make_sampler("auto_sampler", &map(json!({"population_size": 8, "n_startup": 5}))).is_ok());
        assert!(make_sampler("cma", &Map::new()).is_err());
    }
}
