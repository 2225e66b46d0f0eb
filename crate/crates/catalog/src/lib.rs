//! Package catalog: pages rendered from each package's README and manifest,
//! an inverted index with field-weighted TF-IDF search, and the static files
//! (`catalog.json`, `search_index.json`, `packages/<category>/<name>.json`)
//! a browser frontend reads.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod index;
pub mod page;
pub mod site;
pub mod walk;

pub use index::{build_index, tokenize, FieldWeights, Hit, Posting, SearchIndex, FIELD_WEIGHTS};
pub use page::{build_page, PageDoc};
pub use site::{emit_site, page_path, render_site, CATALOG_FILE, INDEX_FILE};
pub use walk::{build_registry_pages, Rejected, RegistryPages};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{package}: README.md is empty")]
    EmptyReadme { package: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CatalogError {
    pub(crate) fn io(path: &Path) -> impl FnOnce(io::Error) -> CatalogError + '_ {
        move |source| CatalogError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Reads `search_index.json` from a site directory.
pub fn load_index(site_dir: &Path) -> Result<SearchIndex, CatalogError> {
    let path = site_dir.join(INDEX_FILE);
    let bytes = std::fs::read(&path).map_err(CatalogError::io(&path))?;
    serde_json::from_slice(&bytes).map_err(|source| CatalogError::Json { path, source })
}
