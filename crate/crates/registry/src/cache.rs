//! Content-addressed package cache.
//!
//! Layout under the cache root:
//!
//! ```text
//! objects/<digest>/...      package files, immutable once published
//! index.json                ref@version -> entry, ref -> current version
//! locks/                    advisory lock files
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{content_digest, PackageFiles};
use crate::refs::PackageRef;
use crate::source::read_dir_files;

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

pub const CACHE_DIR_ENV: &str = "BBOHUB_CACHE_DIR";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cache index {path} is unreadable: {reason}")]
    Index { path: PathBuf, reason: String },
    #[error("cached {package}@{version} is corrupt: {reason}")]
    Corrupt {
        package: PackageRef,
        version: String,
        reason: String,
    },
    #[error("no cache directory: set {CACHE_DIR_ENV}")]
    NoCacheDir,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    #[serde(rename = "ref")]
    pub package: PackageRef,
    pub version: String,
    pub content_digest: String,
    /// Seconds since the Unix epoch.
    pub fetched_at: u64,
    pub files: Vec<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    entries: BTreeMap<String, CacheEntry>,
    /// Most recently fetched version per ref.
    current: BTreeMap<String, String>,
}

fn key(package: &PackageRef, version: &str) -> String {
    format!("{package}@{version}")
}

#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// `BBOHUB_CACHE_DIR`, else `<user cache dir>/bbohub`.
    pub fn from_env() -> Result<Self, CacheError> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(p) if !p.is_empty() => Ok(Self::new(p)),
            _ => dirs::cache_dir()
                .map(|d| Self::new(d.join("bbohub")))
                .ok_or(CacheError::NoCacheDir),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn object_dir(&self, digest: &str) -> PathBuf {
        self.root.join("objects").join(digest)
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    fn read_index(&self) -> Result<Index, CacheError> {
        let path = self.index_path();
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| CacheError::Index {
                path,
                reason: e.to_string(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Index::default()),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    fn write_index(&self, index: &Index) -> Result<(), CacheError> {
        let path = self.index_path();
        let tmp = self.root.join(format!(".index.{}.tmp", std::process::id()));
        let bytes = serde_json::to_vec_pretty(index).expect("index serializes");
        fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    /// Holds an exclusive advisory lock until the returned file is dropped.
    fn lock(&self, name: &str) -> Result<File, CacheError> {
        let dir = self.root.join("locks");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(format!("{name}.lock"));
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(io_err(&path))?;
        file.lock().map_err(io_err(&path))?;
        Ok(file)
    }

    /// The entry for `package@version`, or for the current version when
    /// `version` is `None`.
    pub fn lookup(
        &self,
        package: &PackageRef,
        version: Option<&str>,
    ) -> Result<Option<CacheEntry>, CacheError> {
        let index = self.read_index()?;
        let version = match version {
            Some(v) => v.to_owned(),
            None => match index.current.get(&package.to_string()) {
                Some(v) => v.clone(),
                None => return Ok(None),
            },
        };
        Ok(index.entries.get(&key(package, &version)).cloned())
    }

    pub fn entries(&self) -> Result<Vec<CacheEntry>, CacheError> {
        Ok(self.read_index()?.entries.into_values().collect())
    }

    fn corrupt(entry: &CacheEntry, reason: String) -> CacheError {
        CacheError::Corrupt {
            package: entry.package.clone(),
            version: entry.version.clone(),
            reason,
        }
    }

    /// Reads an entry's files and checks them against its digest.
    pub fn read_files(&self, entry: &CacheEntry) -> Result<PackageFiles, CacheError> {
        let dir = self.object_dir(&entry.content_digest);
        if !dir.is_dir() {
            return Err(Self::corrupt(entry, format!("{} is missing", dir.display())));
        }
        let files = read_dir_files(&dir).map_err(io_err(&dir))?;
        let listed: Vec<&String> = files.keys().collect();
        let expected: Vec<&String> = entry.files.iter().collect();
        if listed != expected {
            return Err(Self::corrupt(entry, "file list differs from the index".into()));
        }
        let digest = content_digest(&files);
        if digest != entry.content_digest {
            return Err(Self::corrupt(
                entry,
                format!("digest {digest} does not match {}", entry.content_digest),
            ));
        }
        Ok(files)
    }

    pub fn verify(&self, entry: &CacheEntry) -> Result<(), CacheError> {
        self.read_files(entry).map(|_| ())
    }

    /// Publishes `files` as `package@version` and makes it the current
    /// version.
    pub fn store(
        &self,
        package: &PackageRef,
        version: &str,
        files: &PackageFiles,
    ) -> Result<CacheEntry, CacheError> {
        fs::create_dir_all(&self.root).map_err(io_err(&self.root))?;
        let _ref_lock = self.lock(&format!("{}__{}", package.category, package.name))?;
        let digest = content_digest(files);
        let entry = CacheEntry {
            package: package.clone(),
            version: version.to_owned(),
            content_digest: digest.clone(),
            fetched_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            files: files.keys().cloned().collect(),
        };
        let target = self.object_dir(&digest);
        let healthy = target.is_dir() && self.verify(&entry).is_ok();
        if !healthy {
            let objects = self.root.join("objects");
            let tmp = objects.join(format!(
                ".tmp-{digest}-{}-{}",
                std::process::id(),
                TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
            ));
            let _ = fs::remove_dir_all(&tmp);
            for (rel, bytes) in files {
                let path = tmp.join(rel);
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent).map_err(io_err(parent))?;
                }
                fs::write(&path, bytes).map_err(io_err(&path))?;
            }
            if target.exists() {
                fs::remove_dir_all(&target).map_err(io_err(&target))?;
            }
            if let Err(e) = fs::rename(&tmp, &target) {
                // Another writer may have published the same content first.
                let _ = fs::remove_dir_all(&tmp);
                if self.verify(&entry).is_err() {
                    return Err(io_err(&target)(e));
                }
            }
        }
        let _index_lock = self.lock("index")?;
        let mut index = self.read_index()?;
        index.entries.insert(key(package, version), entry.clone());
        index.current.insert(package.to_string(), version.to_owned());
        self.write_index(&index)?;
        Ok(entry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refs::parse_ref;

    fn files() -> PackageFiles {
        [
            ("manifest.json".to_string(), b"{}".to_vec()),
            ("README.md".to_string(), b"# x\n".to_vec()),
            ("example/run.sh".to_string(), b"echo\n".to_vec()),
        ]
        .into()
    }

    #[test]
    fn store_lookup_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let r = parse_ref("samplers/x").unwrap();
        let e = cache.store(&r, "1.0.0", &files()).unwrap();
        assert_eq!(cache.lookup(&r, None).unwrap().unwrap(), e);
        assert_eq!(cache.lookup(&r, Some("1.0.0")).unwrap().unwrap(), e);
        assert!(cache.lookup(&r, Some("2.0")).unwrap().is_none());
        assert_eq!(cache.read_files(&e).unwrap(), files());
        assert_eq!(e.files, vec!["README.md", "example/run.sh", "manifest.json"]);
    }

    #[test]
    fn versions_coexist_and_current_moves() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let r = parse_ref("samplers/x").unwrap();
        let mut second = files();
        second.insert("manifest.json".into(), b"{\"v\":2}".to_vec());
        let a = cache.store(&r, "1.0.0", &files()).unwrap();
        let b = cache.store(&r, "2.0.0", &second).unwrap();
        assert_ne!(a.content_digest, b.content_digest);
        assert_eq!(cache.lookup(&r, None).unwrap().unwrap().version, "2.0.0");
        assert_eq!(cache.entries().unwrap().len(), 2);
    }

    #[test]
    fn tampering_is_detected_and_healed_by_store() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let r = parse_ref("benchmarks/y").unwrap();
        let e = cache.store(&r, "1", &files()).unwrap();
        let path = cache.object_dir(&e.content_digest).join("README.md");
        fs::write(&path, b"# y\n").unwrap();
        assert!(matches!(cache.verify(&e), Err(CacheError::Corrupt { .. })));
        cache.store(&r, "1", &files()).unwrap();
        cache.verify(&e).unwrap();
        fs::write(cache.object_dir(&e.content_digest).join("extra"), b"").unwrap();
        assert!(matches!(cache.verify(&e), Err(CacheError::Corrupt { .. })));
    }
}
