//! Publication checks for a package directory.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::manifest::{parse_manifest, MANIFEST_FILE, README_FILE};
use crate::refs::Category;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    /// No errors; warnings do not block publication.
    pub fn is_publishable(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn validate_package(dir: &Path) -> ValidationReport {
    let mut report = ValidationReport::default();
    match fs::read_to_string(dir.join(README_FILE)) {
        Ok(text) if !text.trim().is_empty() => {}
        _ => report.errors.push("README.md required".into()),
    }
    let bytes = match fs::read(dir.join(MANIFEST_FILE)) {
        Ok(b) => b,
        Err(_) => {
            report.errors.push("manifest.json required".into());
            return report;
        }
    };
    let (manifest, unknown) = match parse_manifest(&bytes) {
        Ok(parsed) => parsed,
        Err(e) => {
            report.errors.push(e);
            return report;
        }
    };
    for field in unknown {
        report.warnings.push(format!("unknown manifest field `{field}`"));
    }
    let findings = manifest.check();
    report.errors.extend(findings.errors);
    report.warnings.extend(findings.warnings);
    if let Some(dir_name) = dir.file_name().and_then(|n| n.to_str()) {
        if dir_name != manifest.name {
            report.errors.push(format!(
                "directory `{dir_name}` does not match package name `{}`",
                manifest.name
            ));
        }
    }
    let parent_category = dir
        .parent()
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .and_then(|n| n.parse::<Category>().ok());
    if let Some(category) = parent_category {
        if category != manifest.category {
            report.errors.push(format!(
                "package sits under `{category}` but declares category `{}`",
                manifest.category
            ));
        }
    }
    for rel in manifest.command_files() {
        if rel.split('/').any(|p| p == "..") || !dir.join(&rel).is_file() {
            report.errors.push(format!("plugin file `{rel}` not found in package"));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    const MANIFEST: &str = r#"{"name":"demo","category":"samplers","version":"0.1.0","summary":"Demo.","authors":["a"],"license":"MIT","tags":["demo"],"entry":{"kind":"plugin","command":["python3","./demo.py"],"protocol":1},"defaults":{},"dependencies":[]}"#;

    fn package(root: &Path, manifest: &str, readme: Option<&str>, script: bool) -> std::path::PathBuf {
        let dir = root.join("package/samplers/demo");
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("manifest.json"), manifest).unwrap();
        if let Some(r) = readme {
            fs::write(dir.join("README.md"), r).unwrap();
        }
        if script {
            fs::write(dir.join("demo.py"), "").unwrap();
        }
        dir
    }

    #[test]
    fn complete_package_has_no_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = package(tmp.path(), MANIFEST, Some("# Demo\n"), true);
        assert_eq!(validate_package(&dir), ValidationReport::default());
    }

    #[test]
    fn missing_readme() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = package(tmp.path(), MANIFEST, None, true);
        assert_eq!(validate_package(&dir).errors, vec!["README.md required".to_string()]);
    }

    #[test]
    fn missing_plugin_file_and_unknown_field() {
        let tmp = tempfile::tempdir().unwrap();
        let m = MANIFEST.replace("\"dependencies\":[]", "\"dependencies\":[],\"stars\":5");
        let dir = package(tmp.path(), &m, Some("# Demo\n"), false);
        let r = validate_package(&dir);
        assert_eq!(r.errors, vec!["plugin file `demo.py` not found in package".to_string()]);
        assert_eq!(r.warnings, vec!["unknown manifest field `stars`".to_string()]);
    }

    #[test]
    fn layout_mismatch() {
        let tmp = tempfile::tempdir().unwrap();
        let m = MANIFEST.replace("\"samplers\"", "\"benchmarks\"");
        let dir = package(tmp.path(), &m, Some("# Demo\n"), true);
        assert_eq!(validate_package(&dir).errors.len(), 1);
    }

    #[test]
    fn shipped_registry_is_publishable() {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../registry/package");
        let mut n = 0;
        for cat in fs::read_dir(&root).unwrap() {
            for pkg in fs::read_dir(cat.unwrap().path()).unwrap() {
                let r = validate_package(&pkg.unwrap().path());
                assert_eq!(r, ValidationReport::default());
                n += 1;
            }
        }
        assert!(n >= 10);
    }
}
