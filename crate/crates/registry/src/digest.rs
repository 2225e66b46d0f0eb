//! Canonical content digest of a package file set.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

/// Relative path (`/`-separated) to file bytes.
pub type PackageFiles = BTreeMap<String, Vec<u8>>;

/// SHA-256 over files in path order, each framed as
/// `path, 0x00, length as u64 little-endian, bytes`.
pub fn content_digest(files: &PackageFiles) -> String {
    let mut h = Sha256::new();
    for (path, bytes) in files {
        h.update(path.as_bytes());
        h.update([0u8]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}
