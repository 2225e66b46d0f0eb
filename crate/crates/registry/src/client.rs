//! Fetching packages into the cache and binding them to samplers and
//! problems.

use std::path::PathBuf;

use bbohub_core::{Problem, Sampler};
use bbohub_plugin::{PluginConfig, PluginError, PluginProblem, PluginSampler, PARAMS_ENV};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::builtin;
use crate::cache::{Cache, CacheEntry, CacheError};
use crate::manifest::{parse_manifest, Entry, PackageManifest, MANIFEST_FILE};
use crate::refs::{Category, PackageRef, RefError};
use crate::source::{RegistryRoot, SourceError};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error(transparent)]
    Ref(#[from] RefError),
    #[error("package {package} not found in registry {root}")]
    NotFound { package: PackageRef, root: String },
    #[error("cannot fetch {package} and it is not cached: {reason}")]
    Unreachable { package: PackageRef, reason: String },
    #[error("{package} is not in the cache and network access is disabled")]
    NotCached { package: PackageRef },
    #[error("{package} has an invalid manifest: {}", errors.join("; "))]
    Invalid {
        package: PackageRef,
        errors: Vec<String>,
    },
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("cannot instantiate {package}: {reason}")]
    Binding { package: PackageRef, reason: String },
    #[error("{package} is a {category} package and cannot be executed")]
    NotExecutable {
        package: PackageRef,
        category: Category,
    },
    #[error("plugin for {package} failed: {source}")]
    Plugin {
        package: PackageRef,
        #[source]
        source: PluginError,
    },
}

#[derive(Debug, Clone)]
pub struct RegistryClient {
    pub root: RegistryRoot,
    pub cache: Cache,
    /// Resolve from the cache only.
    pub offline: bool,
}

impl RegistryClient {
    pub fn new(root: RegistryRoot, cache: Cache) -> Self {
        Self {
            root,
            cache,
            offline: false,
        }
    }

    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    fn cached(&self, package: &PackageRef) -> Result<Option<CacheEntry>, RegistryError> {
        match self.cache.lookup(package, None)? {
            Some(entry) => {
                self.cache.verify(&entry)?;
                Ok(Some(entry))
            }
            None => Ok(None),
        }
    }

    /// Downloads `package` into the cache. When the registry cannot be
    /// reached the cached copy is used instead.
    pub fn fetch_package(&self, package: &PackageRef) -> Result<CacheEntry, RegistryError> {
        if self.offline {
            return self.cached(package)?.ok_or_else(|| RegistryError::NotCached {
                package: package.clone(),
            });
        }
        let files = match self.root.read_package(package) {
            Ok(files) => files,
            Err(SourceError::NotFound) => {
                return Err(RegistryError::NotFound {
                    package: package.clone(),
                    root: self.root.to_string(),
                })
            }
            Err(SourceError::Invalid(reason)) => {
                return Err(RegistryError::Invalid {
                    package: package.clone(),
                    errors: vec![reason],
                })
            }
            Err(SourceError::Unreachable(reason)) => {
                return self.cached(package)?.ok_or_else(|| RegistryError::Unreachable {
                    package: package.clone(),
                    reason,
                })
            }
        };
        let invalid = |errors: Vec<String>| RegistryError::Invalid {
            package: package.clone(),
            errors,
        };
        let bytes = files.get(MANIFEST_FILE).expect("sources require a manifest");
        let (manifest, _) = parse_manifest(bytes).map_err(|e| invalid(vec![e]))?;
        let mut errors = manifest.check().errors;
        if manifest.package_ref().as_ref() != Some(package) {
            errors.push(format!(
                "manifest declares {}/{}, requested {package}",
                manifest.category, manifest.name
            ));
        }
        for rel in manifest.command_files() {
            if !files.contains_key(&rel) {
                errors.push(format!("plugin file `{rel}` not found in package"));
            }
        }
        if !errors.is_empty() {
            return Err(invalid(errors));
        }
        Ok(self.cache.store(package, &manifest.version, &files)?)
    }

    /// Fetches (or reuses) `package` and parses its manifest.
    pub fn load_module(&self, package: &PackageRef) -> Result<LoadedPackage, RegistryError> {
        let entry = self.fetch_package(package)?;
        let dir = self.cache.object_dir(&entry.content_digest);
        let bytes = std::fs::read(dir.join(MANIFEST_FILE)).map_err(|source| CacheError::Io {
            path: dir.join(MANIFEST_FILE),
            source,
        })?;
        let (manifest, _) = parse_manifest(&bytes).map_err(|e| RegistryError::Invalid {
            package: package.clone(),
            errors: vec![e],
        })?;
        Ok(LoadedPackage {
            package: package.clone(),
            manifest,
            entry,
            dir,
        })
    }
}

/// A cached package ready to be instantiated.
#[derive(Debug, Clone)]
pub struct LoadedPackage {
    pub package: PackageRef,
    pub manifest: PackageManifest,
    pub entry: CacheEntry,
    /// Directory holding the package files.
    pub dir: PathBuf,
}

/// Manifest defaults overlaid with caller overrides.
pub fn merge_params(defaults: &Map<String, Value>, overrides: &Map<String, Value>) -> Map<String, Value> {
    let mut merged = defaults.clone();
    for (k, v) in overrides {
        merged.insert(k.clone(), v.clone());
    }
    merged
}

impl LoadedPackage {
    /// `false` for pruners and visualization packages, which carry metadata
    /// only.
    pub fn is_executable(&self) -> bool {
        self.manifest.category.is_executable()
    }

    fn expect_category(&self, category: Category) -> Result<(), RegistryError> {
        if !self.is_executable() {
            return Err(RegistryError::NotExecutable {
                package: self.package.clone(),
                category: self.manifest.category,
            });
        }
        if self.manifest.category != category {
            return Err(self.binding(format!(
                "expected a {category} package, got {}",
                self.manifest.category
            )));
        }
        Ok(())
    }

    fn binding(&self, reason: String) -> RegistryError {
        RegistryError::Binding {
            package: self.package.clone(),
            reason,
        }
    }

    /// Absolute argv with `./` elements resolved inside the package.
    pub fn plugin_command(&self) -> Option<Vec<String>> {
        match &self.manifest.entry {
            Entry::Plugin { command, .. } => Some(
                command
                    .iter()
                    .map(|c| match c.strip_prefix("./") {
                        Some(rel) => self.dir.join(rel).display().to_string(),
                        None => c.clone(),
                    })
                    .collect(),
            ),
            Entry::Builtin { .. } => None,
        }
    }

    fn plugin_config(&self, params: &Map<String, Value>, base: &PluginConfig) -> PluginConfig {
        let mut config = base.clone();
        config.working_dir = Some(self.dir.clone());
        config
            .env
            .push((PARAMS_ENV.to_owned(), Value::Object(params.clone()).to_string()));
        config
    }

    pub fn sampler(
        &self,
        overrides: &Map<String, Value>,
        plugin: &PluginConfig,
    ) -> Result<Box<dyn Sampler>, RegistryError> {
        self.expect_category(Category::Samplers)?;
        let params = merge_params(&self.manifest.defaults, overrides);
        match &self.manifest.entry {
            Entry::Builtin { id } => builtin::make_sampler(id, &params).map_err(|r| self.binding(r)),
            Entry::Plugin { .. } => {
                let command = self.plugin_command().expect("plugin entry");
                let config = self.plugin_config(&params, plugin);
                let sampler = PluginSampler::spawn(self.package.to_string(), &command, &config)
                    .map_err(|source| RegistryError::Plugin {
                        package: self.package.clone(),
                        source,
                    })?;
                Ok(Box::new(sampler))
            }
        }
    }

    pub fn problem(
        &self,
        overrides: &Map<String, Value>,
        plugin: &PluginConfig,
    ) -> Result<Box<dyn Problem>, RegistryError> {
        self.expect_category(Category::Benchmarks)?;
        let params = merge_params(&self.manifest.defaults, overrides);
        match &self.manifest.entry {
            Entry::Builtin { id } => builtin::make_problem(id, &params).map_err(|r| self.binding(r)),
            Entry::Plugin { .. } => {
                let command = self.plugin_command().expect("plugin entry");
                let config = self.plugin_config(&params, plugin);
                let problem = PluginProblem::spawn(&command, &config).map_err(|source| {
                    RegistryError::Plugin {
                        package: self.package.clone(),
                        source,
                    }
                })?;
                Ok(Box::new(problem))
            }
        }
    }
}
