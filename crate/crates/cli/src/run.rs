//! `bbohub run`.

use std::fs::{self, File};
use std::path::Path;
use std::time::Duration;

use anyhow::{anyhow, Context};
use bbohub_core::{Direction, Problem, Study, StudyConfig, StudyError, Trial};
use bbohub_plugin::PluginConfig;
use bbohub_registry::{
    merge_params, parse_ref, Cache, Entry, LoadedPackage, RegistryClient, RegistryRoot,
};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::params::to_map;
use crate::{Failure, OrExit, RunArgs, SourceArgs, EXIT_INTERRUPTED, EXIT_USAGE};

pub const JOURNAL_FILE: &str = "journal.ndjson";
pub const RESULT_FILE: &str = "result.json";
pub const RESULT_SCHEMA: u32 = 1;

#[derive(Debug, Serialize)]
pub struct PackageInfo {
    #[serde(rename = "ref")]
    pub package: String,
    pub version: String,
    pub content_digest: String,
    pub params: Map<String, Value>,
}

#[derive(Debug, Serialize)]
pub struct RunResult {
    pub schema: u32,
    /// `complete` or `interrupted`.
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub sampler: PackageInfo,
    pub problem: PackageInfo,
    pub seed: u64,
    pub requested_trials: usize,
    pub n_trials: usize,
    pub directions: Vec<Direction>,
    /// Single-objective studies only; `null` without a complete trial.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best: Option<Option<Trial>>,
    /// Multi-objective studies only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pareto_front: Option<Vec<Trial>>,
    pub trials: Vec<Trial>,
}

pub fn client(source: &SourceArgs) -> Result<RegistryClient, Failure> {
    let cache = Cache::from_env().or_exit(EXIT_USAGE)?;
    Ok(RegistryClient::new(RegistryRoot::resolve(source.registry.as_deref()), cache)
        .offline(source.no_network))
}

fn load(client: &RegistryClient, text: &str) -> Result<LoadedPackage, Failure> {
    let package = parse_ref(text).or_exit(EXIT_USAGE)?;
    client.load_module(&package).or_exit(EXIT_USAGE)
}

fn info(loaded: &LoadedPackage, params: Map<String, Value>) -> PackageInfo {
    PackageInfo {
        package: loaded.package.to_string(),
        version: loaded.entry.version.clone(),
        content_digest: loaded.entry.content_digest.clone(),
        params,
    }
}

fn seconds(value: f64, flag: &str) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(value)
        .map_err(|_| anyhow!("--{flag} must be a non-negative number of seconds"))
        .or_exit(EXIT_USAGE)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_run(args: &RunArgs) -> Result<u8, Failure> {
    let plugin_config = PluginConfig {
        handshake_timeout: seconds(args.handshake_timeout, "handshake-timeout")?,
        request_timeout: seconds(args.plugin_timeout, "plugin-timeout")?,
        ..PluginConfig::default()
    };
    let client = client(&args.source)?;
    let problem_pkg = load(&client, &args.problem)?;
    let sampler_pkg = load(&client, &args.sampler)?;

    let problem_overrides = to_map(&args.set);
    let mut sampler_overrides = to_map(&args.sampler_set);
    // Plugin samplers cannot see the study seed, so it travels as a param.
    if matches!(sampler_pkg.manifest.entry, Entry::Plugin { .. })
        && !sampler_overrides.contains_key("seed")
    {
        sampler_overrides.insert("seed".into(), Value::from(args.seed));
    }

    let problem: Box<dyn Problem> = problem_pkg
        .problem(&problem_overrides, &plugin_config)
        .or_exit(EXIT_USAGE)?;
    let sampler = sampler_pkg
        .sampler(&sampler_overrides, &plugin_config)
        .or_exit(EXIT_USAGE)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .or_exit(EXIT_USAGE)?;
    let journal_path = args.out.join(JOURNAL_FILE);
    let journal = File::create(&journal_path)
        .with_context(|| format!("creating {}", journal_path.display()))
        .or_exit(EXIT_USAGE)?;
    let directions = problem.directions().to_vec();
    let study = Study::create_with_journal(
        StudyConfig::new(
            directions.clone(),
            problem.search_space().clone(),
            args.seed,
            sampler,
        ),
        Box::new(journal),
    )
    .or_exit(EXIT_USAGE)?;

    let outcome = study.optimize_parallel(&problem, args.trials, args.workers as usize);
    let trials = study.trials();
    let single = directions.len() == 1;
    let result = RunResult {
        schema: RESULT_SCHEMA,
        status: if outcome.is_ok() { "complete" } else { "interrupted" },
        error: outcome.as_ref().err().map(|e| e.to_string()),
        sampler: info(&sampler_pkg, merge_params(&sampler_pkg.manifest.defaults, &sampler_overrides)),
        problem: info(&problem_pkg, merge_params(&problem_pkg.manifest.defaults, &problem_overrides)),
        seed: args.seed,
        requested_trials: args.trials,
        n_trials: trials.len(),
        directions: directions.clone(),
        best: single.then(|| study.best_trial().ok()),
        pareto_front: (!single).then(|| study.pareto_front().unwrap_or_default()),
        trials,
    };
    drop(study);
    drop(problem);
    write_json(&args.out.join(RESULT_FILE), &result).or_exit(EXIT_INTERRUPTED)?;

    if let Err(e) = outcome {
        let code = match e {
            StudyError::Configuration(_) => EXIT_USAGE,
            _ => EXIT_INTERRUPTED,
        };
        return Err(Failure {
            code,
            error: anyhow!(e).context(format!(
                "run stopped after {} trials; journal kept at {}",
                result.n_trials,
                journal_path.display()
            )),
        });
    }
    let complete = result.trials.iter().filter(|t| t.is_complete()).count();
    match (&result.best, &result.pareto_front) {
        (Some(Some(best)), _) => println!(
            "{} trials ({complete} complete), best value {} at trial {}",
            result.n_trials,
            best.value().unwrap_or(f64::NAN),
            best.id
        ),
        (_, Some(front)) => println!(
            "{} trials ({complete} complete), pareto front of {} trials",
            result.n_trials,
            front.len()
        ),
        _ => println!("{} trials ({complete} complete), no best trial", result.n_trials),
    }
    Ok(0)
}
