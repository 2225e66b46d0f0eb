//! Static catalog artifacts.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::index::SearchIndex;
use crate::page::PageDoc;
use crate::CatalogError;

pub const CATALOG_FILE: &str = "catalog.json";
pub const INDEX_FILE: &str = "search_index.json";
pub const PAGES_DIR: &str = "packages";
pub const CATALOG_SCHEMA: u32 = 1;

#[derive(Serialize)]
struct Catalog<'a> {
    schema: u32,
    packages: Vec<&'a PageDoc>,
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("catalog types serialize");
    bytes.push(b'\n');
    bytes
}

fn write_if_changed(path: &Path, bytes: &[u8]) -> Result<(), CatalogError> {
    if fs::read(path).is_ok_and(|old| old == bytes) {
        return Ok(());
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(CatalogError::io(parent))?;
    }
    fs::write(path, bytes).map_err(CatalogError::io(path))
}

/// Relative path of a package page, e.g. `packages/samplers/tpe.json`.
pub fn page_path(doc: &PageDoc) -> PathBuf {
    Path::new(PAGES_DIR)
        .join(&doc.category)
        .join(format!("{}.json", doc.name))
}

/// Serialized artifacts keyed by relative path.
pub fn render_site(docs: &[PageDoc], index: &SearchIndex) -> Vec<(PathBuf, Vec<u8>)> {
    let mut sorted: Vec<&PageDoc> = docs.iter().collect();
    sorted.sort_by(|a, b| a.package.cmp(&b.package));
    let mut out = vec![
        (
            PathBuf::from(CATALOG_FILE),
            pretty(&Catalog {
                schema: CATALOG_SCHEMA,
                packages: sorted.clone(),
            }),
        ),
        (PathBuf::from(INDEX_FILE), pretty(index)),
    ];
    out.extend(sorted.iter().map(|d| (page_path(d), pretty(d))));
    out
}

/// Writes the catalog, the index and one page per package under `out_dir`.
/// Files whose bytes are unchanged are left alone, and pages of packages no
/// longer present are removed. Returns the emitted relative paths.
pub fn emit_site(
    docs: &[PageDoc],
    index: &SearchIndex,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CatalogError> {
    let files = render_site(docs, index);
    for (rel, bytes) in &files {
        write_if_changed(&out_dir.join(rel), bytes)?;
    }
    let keep: BTreeSet<PathBuf> = files.iter().map(|(p, _)| out_dir.join(p)).collect();
    let pages = out_dir.join(PAGES_DIR);
    if let Ok(categories) = fs::read_dir(&pages) {
        for category in categories.flatten() {
            let Ok(entries) = fs::read_dir(category.path()) else { continue };
            for e in entries.flatten() {
                let p = e.path();
                if p.extension().is_some_and(|x| x == "json") && !keep.contains(&p) {
                    fs::remove_file(&p).map_err(CatalogError::io(&p))?;
                }
            }
        }
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_index;

    fn doc(package: &str) -> PageDoc {
        let (category, name) = package.split_once('/').unwrap();
        PageDoc {
            package: package.into(),
            category: category.into(),
            name: name.into(),
            version: "1.0.0".into(),
            title: name.into(),
            summary: "s".into(),
            authors: vec![],
            license: "MIT".into(),
            tags: vec![],
            body_text: "b".into(),
            body_html: "<p>b</p>".into(),
            thumbnail: None,
            example_snippet: None,
        }
    }

    #[test]
    fn page_path_rule() {
        assert_eq!(
            page_path(&doc("samplers/tpe")),
            Path::new("packages/samplers/tpe.json")
        );
    }

    #[test]
    fn stale_pages_are_pruned() {
        let tmp = tempfile::tempdir().unwrap();
        let all = [doc("samplers/a"), doc("samplers/b")];
        emit_site(&all, &build_index(&all), tmp.path()).unwrap();
        assert!(tmp.path().join("packages/samplers/b.json").is_file());
        let one = [doc("samplers/a")];
        let written = emit_site(&one, &build_index(&one), tmp.path()).unwrap();
        assert_eq!(written.len(), 3);
        assert!(!tmp.path().join("packages/samplers/b.json").exists());
    }

    #[test]
    fn input_order_does_not_matter() {
        let a = [doc("benchmarks/x"), doc("samplers/a")];
        let b = [doc("samplers/a"), doc("benchmarks/x")];
        assert_eq!(
            render_site(&a, &build_index(&a)),
            render_site(&b, &build_index(&b))
        );
    }
}
