//! `registry`, `catalog` and `search` subcommands.

use std::path::Path;

use anyhow::anyhow;
use bbohub_catalog::{build_index, build_registry_pages, emit_site, load_index};
use bbohub_registry::{parse_ref, validate_package, Cache};

use crate::run::client;
use crate::{Failure, OrExit, SearchArgs, SourceArgs, EXIT_FINDINGS, EXIT_USAGE};

pub fn registry_fetch(text: &str, source: &SourceArgs) -> Result<u8, Failure> {
    let package = parse_ref(text).or_exit(EXIT_USAGE)?;
    let entry = client(source)?.fetch_package(&package).or_exit(EXIT_USAGE)?;
    println!("{}\t{}\t{}", entry.package, entry.version, entry.content_digest);
    Ok(0)
}

pub fn registry_validate(path: &Path) -> Result<u8, Failure> {
    if !path.is_dir() {
        return Err(anyhow!("{} is not a directory", path.display())).or_exit(EXIT_USAGE);
    }
    let report = validate_package(path);
    for e in &report.errors {
        println!("error: {e}");
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    if report.is_publishable() {
        println!("{}: ok", path.display());
        Ok(0)
    } else {
        println!("{}: {} error(s)", path.display(), report.errors.len());
        Ok(EXIT_FINDINGS)
    }
}

pub fn registry_list() -> Result<u8, Failure> {
    let cache = Cache::from_env().or_exit(EXIT_USAGE)?;
    let mut entries = cache.entries().or_exit(EXIT_USAGE)?;
    entries.sort_by_key(|e| (e.package.to_string(), e.version.clone()));
    for e in entries {
        println!("{}\t{}\t{}", e.package, e.version, e.content_digest);
    }
    Ok(0)
}

pub fn catalog_build(registry: &Path, out: &Path) -> Result<u8, Failure> {
    if !registry.join("package").is_dir() {
        return Err(anyhow!("{} has no package/ directory", registry.display())).or_exit(EXIT_USAGE);
    }
    let pages = build_registry_pages(registry);
    for (dir, w) in &pages.warnings {
        eprintln!("warning: {}: {w}", dir.display());
    }
    for r in &pages.rejected {
        for e in &r.errors {
            eprintln!("error: {}: {e}", r.dir.display());
        }
    }
    let index = build_index(&pages.docs);
    let files = emit_site(&pages.docs, &index, out).or_exit(EXIT_USAGE)?;
    println!(
        "{} packages, {} rejected, {} files written to {}",
        pages.docs.len(),
        pages.rejected.len(),
        files.len(),
        out.display()
    );
    Ok(if pages.rejected.is_empty() { 0 } else { EXIT_FINDINGS })
}

pub fn search(args: &SearchArgs) -> Result<u8, Failure> {
    let index = load_index(&args.index).or_exit(EXIT_USAGE)?;
    for hit in index.search(&args.query, &args.tags) {
        println!("{}\t{:.6}", hit.package, hit.score);
    }
    Ok(0)
}
