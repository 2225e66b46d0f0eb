//! `bbohub`: run studies, manage the package cache, build and search the
//! catalog.
//!
//! Exit codes: 0 success, 1 validation findings, 2 usage or configuration
//! error, 3 run interrupted.

mod commands;
mod params;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::params::parse_assignment;

pub const EXIT_FINDINGS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INTERRUPTED: u8 = 3;

/// An error together with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub trait OrExit<T> {
    fn or_exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrExit<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "bbohub", version, about = "Black-box optimization package hub")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a study with a sampler package on a benchmark package.
    Run(RunArgs),
    /// Fetch, validate and list registry packages.
    #[command(subcommand)]
    Registry(RegistryCommand),
    /// Build or search the static catalog.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Search a built catalog (same as `catalog search`).
    Search(SearchArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Registry root: a directory or an http(s) URL. Defaults to the
    /// registry compiled into this binary.
    #[arg(long, env = "BBOHUB_REGISTRY_ROOT")]
    pub registry: Option<String>,
    /// Use only the local cache.
    #[arg(long)]
    pub no_network: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Sampler package, e.g. `samplers/tpe`.
    #[arg(long)]
    pub sampler: String,
    /// Benchmark package, e.g. `benchmarks/bbob`.
    #[arg(long)]
    pub problem: String,
    /// Problem parameter `key=value` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_assignment)]
    pub set: Vec<(String, serde_json::Value)>,
    /// Sampler parameter `key=value` (repeatable).
    #[arg(long = "sampler-set", value_name = "KEY=VALUE", value_parser = parse_assignment)]
    pub sampler_set: Vec<(String, serde_json::Value)>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for `journal.ndjson` and `result.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Seconds a plugin may take to answer one request.
    #[arg(long, default_value_t = 30.0)]
    pub plugin_timeout: f64,
    /// Seconds a plugin may take to complete the handshake.
    #[arg(long, default_value_t = 10.0)]
    pub handshake_timeout: f64,
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Debug, Subcommand)]
enum RegistryCommand {
    /// Download a package into the cache.
    Fetch {
        package: String,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Check a package directory for publication.
    Validate { path: PathBuf },
    /// List cached packages.
    List,
}

#[derive(Debug, Subcommand)]
enum CatalogCommand {
    /// Build pages and the search index for every package of a registry.
    Build {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Search(SearchArgs),
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Directory produced by `catalog build`.
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, default_value = "")]
    pub query: String,
    /// Required tag (repeatable).
    #[arg(long = "tag")]
    pub tags: Vec<String>,
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Run(args) => run::cmd_run(&args),
        Command::Registry(RegistryCommand::Fetch { package, source }) => {
            commands::registry_fetch(&package, &source)
        }
        Command::Registry(RegistryCommand::Validate { path }) => commands::registry_validate(&path),
        Command::Registry(RegistryCommand::List) => commands::registry_list(),
        Command::Catalog(CatalogCommand::Build { registry, out }) => {
            commands::catalog_build(&registry, &out)
        }
        Command::Catalog(CatalogCommand::Search(args)) | Command::Search(args) => {
            commands::search(&args)
        }
    }
}

/// The error chain joined by `: `, skipping causes whose text the previous
/// message already contains.
fn render(error: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in error.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {}", render(&error));
            ExitCode::from(code)
        }
    }
}
