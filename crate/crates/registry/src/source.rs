//! Where packages come from: a local tree, an HTTP server, or the tree
//! compiled into the binary.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::digest::PackageFiles;
use crate::manifest::{parse_manifest, MANIFEST_FILE, README_FILE};
use crate::refs::{Category, PackageRef};

pub const REGISTRY_ROOT_ENV: &str = "BBOHUB_REGISTRY_ROOT";

mod embedded {
    include!(concat!(env!("OUT_DIR"), "/embedded.rs"));
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegistryRoot {
    Local(PathBuf),
    /// Base URL under which `package/<category>/<name>/` is served.
    Http(String),
    /// The registry tree shipped inside this binary.
    Embedded,
}

#[derive(Debug)]
pub enum SourceError {
    NotFound,
    Unreachable(String),
    Invalid(String),
}

impl fmt::Display for RegistryRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegistryRoot::Local(p) => write!(f, "{}", p.display()),
            RegistryRoot::Http(u) => f.write_str(u),
            RegistryRoot::Embedded => f.write_str("<builtin registry>"),
        }
    }
}

fn skip(name: &str) -> bool {
    name.starts_with('.') || name == "__pycache__"
}

/// Reads every file under `dir`, keyed by `/`-separated relative path.
pub fn read_dir_files(dir: &Path) -> io::Result<PackageFiles> {
    let mut files = PackageFiles::new();
    let walker = walkdir::WalkDir::new(dir)
        .min_depth(1)
        .into_iter()
        .filter_entry(|e| !skip(&e.file_name().to_string_lossy()));
    for entry in walker {
        let entry = entry.map_err(io::Error::other)?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(dir)
            .expect("walk stays under dir")
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        files.insert(rel, fs::read(entry.path())?);
    }
    Ok(files)
}

impl RegistryRoot {
    /// `http://` and `https://` roots are remote; anything else is a path.
    pub fn parse(text: &str) -> Self {
        if text.starts_with("http://") || text.starts_with("https://") {
            RegistryRoot::Http(text.trim_end_matches('/').to_owned())
        } else {
            RegistryRoot::Local(PathBuf::from(text))
        }
    }

    /// An explicit root, else `BBOHUB_REGISTRY_ROOT`, else the embedded tree.
    pub fn resolve(explicit: Option<&str>) -> Self {
        match explicit {
            Some(t) => Self::parse(t),
            None => match std::env::var(REGISTRY_ROOT_ENV) {
                Ok(t) if !t.is_empty() => Self::parse(&t),
                _ => RegistryRoot::Embedded,
            },
        }
    }

    pub fn read_package(&self, package: &PackageRef) -> Result<PackageFiles, SourceError> {
        match self {
            RegistryRoot::Local(root) => {
                if !root.is_dir() {
                    return Err(SourceError::Unreachable(format!(
                        "registry directory {} does not exist",
                        root.display()
                    )));
                }
                let dir = root.join(package.registry_path());
                if !dir.join(MANIFEST_FILE).is_file() {
                    return Err(SourceError::NotFound);
                }
                read_dir_files(&dir).map_err(|e| SourceError::Unreachable(e.to_string()))
            }
            RegistryRoot::Embedded => {
                let prefix = format!("{}/", package.registry_path());
                let files: PackageFiles = embedded::FILES
                    .iter()
                    .filter_map(|(p, b)| p.strip_prefix(&prefix).map(|rel| (rel.to_owned(), b.to_vec())))
                    .collect();
                if files.contains_key(MANIFEST_FILE) {
                    Ok(files)
                } else {
                    Err(SourceError::NotFound)
                }
            }
            RegistryRoot::Http(base) => http_read(base, package),
        }
    }

    /// Packages present under a local or embedded root, in ref order.
    pub fn list_packages(&self) -> Result<Vec<PackageRef>, SourceError> {
        let mut out = Vec::new();
        match self {
            RegistryRoot::Local(root) => {
                for category in Category::ALL {
                    let dir = root.join("package").join(category.as_str());
                    let Ok(entries) = fs::read_dir(&dir) else { continue };
                    for e in entries.flatten() {
                        let name = e.file_name().to_string_lossy().into_owned();
                        if e.path().is_dir() && !skip(&name) {
                            if let Ok(r) = PackageRef::new(category, name) {
                                out.push(r);
                            }
                        }
                    }
                }
            }
            RegistryRoot::Embedded => {
                for (path, _) in embedded::FILES {
                    let parts: Vec<&str> = path.split('/').collect();
                    if parts.len() == 4 && parts[3] == MANIFEST_FILE {
                        if let Ok(r) = crate::refs::parse_ref(&format!("{}/{}", parts[1], parts[2])) {
                            out.push(r);
                        }
                    }
                }
            }
            RegistryRoot::Http(_) => {
                return Err(SourceError::Invalid("HTTP registries cannot be listed".into()))
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

/// Paths of every file compiled into the embedded registry.
pub fn embedded_paths() -> impl Iterator<Item = &'static str> {
    embedded::FILES.iter().map(|(p, _)| *p)
}

fn http_get(agent: &ureq::Agent, url: &str) -> Result<Vec<u8>, SourceError> {
    let mut response = agent
        .get(url)
        .call()
        .map_err(|e| SourceError::Unreachable(format!("{url}: {e}")))?;
    match response.status().as_u16() {
        200 => response
            .body_mut()
            .read_to_vec()
            .map_err(|e| SourceError::Unreachable(format!("{url}: {e}"))),
        404 | 410 => Err(SourceError::NotFound),
        code => Err(SourceError::Unreachable(format!("{url}: HTTP {code}"))),
    }
}

/// A plain HTTP server cannot list directories, so the files fetched are the
/// manifest, the README and whatever the plugin command names.
fn http_read(base: &str, package: &PackageRef) -> Result<PackageFiles, SourceError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(10)))
        .http_status_as_error(false)
        .build()
        .into();
    let dir = format!("{base}/{}", package.registry_path());
    let mut files = PackageFiles::new();
    let manifest = http_get(&agent, &format!("{dir}/{MANIFEST_FILE}"))?;
    let (parsed, _) = parse_manifest(&manifest).map_err(SourceError::Invalid)?;
    files.insert(MANIFEST_FILE.to_owned(), manifest);
    match http_get(&agent, &format!("{dir}/{README_FILE}")) {
        Ok(b) => {
            files.insert(README_FILE.to_owned(), b);
        }
        Err(SourceError::NotFound) => {}
        Err(e) => return Err(e),
    }
    for rel in parsed.command_files() {
        if rel.split('/').any(|p| p == ".." || p.is_empty()) {
            return Err(SourceError::Invalid(format!("command file {rel:?} escapes the package")));
        }
        let bytes = http_get(&agent, &format!("{dir}/{rel}")).map_err(|e| match e {
            SourceError::NotFound => SourceError::Invalid(format!("command file {rel:?} missing on server")),
            other => other,
        })?;
        files.insert(rel, bytes);
    }
    Ok(files)
}
