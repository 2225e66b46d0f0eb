//! Building pages for every package of a registry tree.

use std::fs;
use std::path::{Path, PathBuf};

use bbohub_registry::{parse_manifest, validate_package, Category};

use crate::page::{build_page, PageDoc};

/// A package that could not be published.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejected {
    pub dir: PathBuf,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RegistryPages {
    pub docs: Vec<PageDoc>,
    pub rejected: Vec<Rejected>,
    /// `(package dir, warning)` pairs.
    pub warnings: Vec<(PathBuf, String)>,
}

fn package_dirs(root: &Path) -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    for category in Category::ALL {
        let Ok(entries) = fs::read_dir(root.join("package").join(category.as_str())) else {
            continue;
        };
        for e in entries.flatten() {
            let name = e.file_name();
            let name = name.to_string_lossy();
            if e.path().is_dir() && !name.starts_with('.') && name != "__pycache__" {
                dirs.push(e.path());
            }
        }
    }
    dirs.sort();
    dirs
}

/// Validates every package under `root/package/` and builds pages for the
/// publishable ones.
pub fn build_registry_pages(root: &Path) -> RegistryPages {
    let mut out = RegistryPages::default();
    for dir in package_dirs(root) {
        let report = validate_package(&dir);
        out.warnings
            .extend(report.warnings.iter().map(|w| (dir.clone(), w.clone())));
        if !report.is_publishable() {
            out.rejected.push(Rejected {
                dir,
                errors: report.errors,
            });
            continue;
        }
        let page = fs::read(dir.join("manifest.json"))
            .map_err(|e| e.to_string())
            .and_then(|b| parse_manifest(&b).map(|(m, _)| m))
            .and_then(|m| {
                let readme = fs::read_to_string(dir.join("README.md")).map_err(|e| e.to_string())?;
                build_page(&readme, &m).map_err(|e| e.to_string())
            });
        match page {
            Ok(doc) => out.docs.push(doc),
            Err(e) => out.rejected.push(Rejected {
                dir,
                errors: vec![e],
            }),
        }
    }
    out
}
