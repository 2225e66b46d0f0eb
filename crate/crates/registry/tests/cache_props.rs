use std::fs;

use bbohub_registry::{content_digest, parse_ref, Cache, CacheError, PackageFiles};
use proptest::prelude::*;

fn package_files() -> impl Strategy<Value = PackageFiles> {
    prop::collection::btree_map(
        "[a-z]{1,6}(/[a-z]{1,6})?\\.(md|json|py)",
        prop::collection::vec(any::<u8>(), 1..64),
        1..5,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stored_content_round_trips(files in package_files()) {
        let tmp = tempfile::tempdir().unwrap();
        let cache = Cache::new(tmp.path());
        let r = parse_ref("samplers/prop").unwrap();
        let entry = cache.store(&r, "1.0.0", &files).unwrap();
        prop_assert_eq!(&entry.content_digest, &content_digest(&files));
        prop_assert_eq!(cache.read_files(&entry).unwrap(), files);
        prop_assert_eq!(cache.lookup(&r, None).unwrap(), Some(entry));
    }

    #[test]
    fn any_flipped_byte_is_corrupt(files in package_files(), pick in any::<prop::sample::Index>(), bit in 0u8..8) {
        let tmp = tempfile::tempdir().unwrap();
        let cache = Cache::new(tmp.path());
        let r = parse_ref("samplers/prop").unwrap();
        let entry = cache.store(&r, "1.0.0", &files).unwrap();
        let (rel, bytes) = files.iter().nth(pick.index(files.len())).unwrap();
        let at = pick.index(bytes.len());
        let path = cache.object_dir(&entry.content_digest).join(rel);
        let mut tampered = bytes.clone();
        tampered[at] ^= 1 << bit;
        fs::write(&path, tampered).unwrap();
        let err = cache.read_files(&entry).unwrap_err();
        let corrupt = matches!(err, CacheError::Corrupt { .. });
        prop_assert!(corrupt);
    }

    #[test]
    fn digest_depends_on_names_and_contents(files in package_files()) {
        let digest = content_digest(&files);
        let mut renamed = files.clone();
        let (k, v) = renamed.pop_first().unwrap();
        renamed.insert(format!("{k}x"), v);
        prop_assert_ne!(content_digest(&renamed), digest.clone());
        let mut grown = files.clone();
        grown.values_mut().next().unwrap().push(0);
        prop_assert_ne!(content_digest(&grown), digest);
    }
}
