//! `manifest.json`: package metadata and how to instantiate the package.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::builtin;
use crate::refs::{is_valid_name, Category, PackageRef};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const README_FILE: &str = "README.md";

pub const FIELDS: [&str; 10] = [
    "name",
    "category",
    "version",
    "summary",
    "authors",
    "license",
    "tags",
    "entry",
    "defaults",
    "dependencies",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Entry {
    Builtin { id: String },
    /// `command` elements starting with `./` name files inside the package.
    Plugin { command: Vec<String>, protocol: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageManifest {
    pub name: String,
    pub category: Category,
    pub version: String,
    pub summary: String,
    pub authors: Vec<String>,
    pub license: String,
    pub tags: Vec<String>,
    pub entry: Entry,
    #[serde(default)]
    pub defaults: Map<String, Value>,
    #[serde(default)]
    pub dependencies: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Findings {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Findings {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Parses manifest bytes, returning the manifest and the names of fields
/// outside the schema.
pub fn parse_manifest(bytes: &[u8]) -> Result<(PackageManifest, Vec<String>), String> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| format!("manifest.json is not valid JSON: {e}"))?;
    let Value::Object(object) = &value else {
        return Err("manifest.json must hold an object".into());
    };
    let unknown = object
        .keys()
        .filter(|k| !FIELDS.contains(&k.as_str()))
        .cloned()
        .collect();
    let manifest = serde_json::from_value(value).map_err(|e| format!("manifest.json: {e}"))?;
    Ok((manifest, unknown))
}

/// Lowercase, with spaces and underscores turned into hyphens.
pub fn normalize_tag(tag: &str) -> String {
    tag.trim()
        .chars()
        .map(|c| match c {
            ' ' | '_' => '-',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

pub fn is_dotted_version(v: &str) -> bool {
    !v.is_empty() && v.split('.').all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
}

fn is_license_id(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+' | ' ' | '(' | ')'))
}

impl PackageManifest {
    pub fn package_ref(&self) -> Option<PackageRef> {
        PackageRef::new(self.category, &self.name).ok()
    }

    /// Schema and consistency checks that need no files.
    pub fn check(&self) -> Findings {
        let mut f = Findings::default();
        if !is_valid_name(&self.name) {
            f.errors.push(format!("name {:?} must match [a-z0-9_]+", self.name));
        }
        if !is_dotted_version(&self.version) {
            f.errors.push(format!("version {:?} must be dotted integers", self.version));
        }
        if self.summary.trim().is_empty() || self.summary.contains('\n') {
            f.errors.push("summary must be one non-empty line".into());
        }
        if self.authors.is_empty() || self.authors.iter().any(|a| a.trim().is_empty()) {
            f.errors.push("authors must be a non-empty list of names".into());
        }
        if !is_license_id(&self.license) {
            f.errors.push(format!("license {:?} is not an SPDX-style identifier", self.license));
        }
        for tag in &self.tags {
            let norm = normalize_tag(tag);
            if norm.is_empty() {
                f.errors.push("empty tag".into());
            } else if norm != *tag {
                f.warnings.push(format!("tag {tag:?} normalized to {norm:?}"));
            }
            if !norm.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-') {
                f.warnings.push(format!("tag {norm:?} has characters outside [a-z0-9-]"));
            }
        }
        match &self.entry {
            Entry::Builtin { id } => match builtin::kind_of(id) {
                None => f.errors.push(format!("unknown builtin id {id:?}")),
                Some(kind) if kind != self.category => f.errors.push(format!(
                    "builtin {id:?} belongs to {kind}, not {}",
                    self.category
                )),
                Some(_) => {}
            },
            Entry::Plugin { command, protocol } => {
                if command.is_empty() {
                    f.errors.push("plugin command is empty".into());
                }
                if *protocol != bbohub_plugin::PROTOCOL_VERSION {
                    f.errors.push(format!(
                        "plugin protocol {protocol} unsupported, expected {}",
                        bbohub_plugin::PROTOCOL_VERSION
                    ));
                }
            }
        }
        f
    }

    /// Tags after normalization, deduplicated in order.
    pub fn normalized_tags(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.tags {
            let n = normalize_tag(t);
            if !n.is_empty() && !out.contains(&n) {
                out.push(n);
            }
        }
        out
    }

    /// Package files referenced by the plugin command.
    pub fn command_files(&self) -> Vec<String> {
        match &self.entry {
            Entry::Plugin { command, .. } => command
                .iter()
                .filter_map(|c| c.strip_prefix("./"))
                .map(str::to_owned)
                .collect(),
            Entry::Builtin { .. } => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> &'static str {
        r#"{"name":"tpe","category":"samplers","version":"1.2.0","summary":"TPE.","authors":["a"],"license":"MIT","tags":["bayesian"],"entry":{"kind":"builtin","id":"tpe"},"defaults":{},"dependencies":[]}"#
    }

    #[test]
    fn parses_and_checks_clean() {
        let (m, unknown) = parse_manifest(sample().as_bytes()).unwrap();
        assert!(unknown.is_empty());
        assert_eq!(m.check(), Findings::default());
        assert_eq!(m.package_ref().unwrap().to_string(), "samplers/tpe");
    }

    #[test]
    fn unknown_fields_are_reported() {
        let text = sample().replace("\"dependencies\":[]", "\"dependencies\":[],\"homepage\":\"x\"");
        let (_, unknown) = parse_manifest(text.as_bytes()).unwrap();
        assert_eq!(unknown, vec!["homepage".to_string()]);
    }

    #[test]
    fn tag_normalization_warns() {
        let text = sample().replace("\"bayesian\"", "\"Multi-Objective\"");
        let (m, _) = parse_manifest(text.as_bytes()).unwrap();
        let f = m.check();
        assert!(f.errors.is_empty());
        assert_eq!(f.warnings, vec![r#"tag "Multi-Objective" normalized to "multi-objective""#.to_string()]);
        assert_eq!(m.normalized_tags(), vec!["multi-objective".to_string()]);
    }

    #[test]
    fn bad_fields_are_errors() {
        let text = sample()
            .replace("1.2.0", "1.x")
            .replace("\"id\":\"tpe\"", "\"id\":\"cma\"")
            .replace("[\"a\"]", "[]");
        let (m, _) = parse_manifest(text.as_bytes()).unwrap();
        assert_eq!(m.check().errors.len(), 3);
        let wrong_cat = sample().replace("\"id\":\"tpe\"", "\"id\":\"bbob\"");
        let (m, _) = parse_manifest(wrong_cat.as_bytes()).unwrap();
        assert_eq!(m.check().errors.len(), 1);
    }

    #[test]
    fn plugin_protocol_and_files() {
        let text = sample().replace(
            r#"{"kind":"builtin","id":"tpe"}"#,
            r#"{"kind":"plugin","command":["python3","./s.py","--fast"],"protocol":2}"#,
        );
        let (m, _) = parse_manifest(text.as_bytes()).unwrap();
        assert_eq!(m.command_files(), vec!["s.py".to_string()]);
        assert_eq!(m.check().errors.len(), 1);
    }

    #[test]
    fn versions() {
        assert!(is_dotted_version("1"));
        assert!(is_dotted_version("0.10.3"));
        assert!(!is_dotted_version("1..2"));
        assert!(!is_dotted_version("v1"));
    }
}
