//! Package registry client.
//!
//! A registry is a tree `package/<category>/<name>/` holding `manifest.json`,
//! `README.md` and any auxiliary files, served from a local directory or over
//! plain HTTP. Fetched packages land in a content-addressed cache so later
//! loads work offline.

pub mod builtin;
pub mod cache;
pub mod client;
pub mod digest;
pub mod manifest;
pub mod refs;
pub mod source;
pub mod validate;

pub use cache::{Cache, CacheEntry, CacheError, CACHE_DIR_ENV};
pub use client::{merge_params, LoadedPackage, RegistryClient, RegistryError};
pub use digest::{content_digest, PackageFiles};
pub use manifest::{normalize_tag, parse_manifest, Entry, PackageManifest};
pub use refs::{parse_ref, Category, PackageRef, RefError};
pub use source::{RegistryRoot, REGISTRY_ROOT_ENV};
pub use validate::{validate_package, ValidationReport};
