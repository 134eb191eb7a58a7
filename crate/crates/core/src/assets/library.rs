use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use sha2::{Digest, Sha256};

use super::manifest::manifest_uri;
use super::{
    parse_sdf, parse_urdf_bytes, AssetError, AssetKind, DefaultFetcher, Fetcher, KinematicTree,
    ManifestEntry, RepositoryManifest,
};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Fetches manifests and resources, verifies checksums, and caches parsed
/// trees per (name, checksum).
pub struct AssetLibrary {
    fetcher: Arc<dyn Fetcher>,
    cache: RwLock<HashMap<(String, String), Arc<KinematicTree>>>,
}

impl Default for AssetLibrary {
    fn default() -> Self {
        Self::new(Arc::new(DefaultFetcher::default()))
    }
}

impl AssetLibrary {
    pub fn new(fetcher: Arc<dyn Fetcher>) -> Self {
        Self { fetcher, cache: RwLock::new(HashMap::new()) }
    }

    /// `repository` is a directory-like uri (the manifest file name is
    /// appended) or a direct `.json` uri.
    pub fn fetch_manifest(&self, repository: &str) -> Result<RepositoryManifest, AssetError> {
        let uri = manifest_uri(repository);
        let bytes = self.fetcher.fetch(&uri)?;
        RepositoryManifest::from_json(&bytes, &uri)
    }

    /// Resource bytes, checked against the entry's checksum when it has one.
    pub fn fetch_entry(
        &self,
        manifest: &RepositoryManifest,
        entry: &ManifestEntry,
    ) -> Result<Vec<u8>, AssetError> {
        let bytes = self.fetcher.fetch(&manifest.resolve_uri(entry))?;
        if let Some(expected) = &entry.checksum {
            let actual = format!("sha256:{}", sha256_hex(&bytes));
            if !actual.eq_ignore_ascii_case(expected) {
                return Err(AssetError::Integrity {
                    name: entry.name.clone(),
                    expected: expected.clone(),
                    actual,
                });
            }
        }
        Ok(bytes)
    }

    /// Fetches every entry once to check its checksum.
    pub fn verify_manifest(&self, manifest: &RepositoryManifest) -> Result<(), AssetError> {
        for entry in &manifest.entries {
            self.fetch_entry(manifest, entry)?;
        }
        Ok(())
    }

    /// Kinematic tree for an articulated entry, fetched on first use.
    pub fn resolve_robot(
        &self,
        name: &str,
        manifest: &RepositoryManifest,
    ) -> Result<Arc<KinematicTree>, AssetError> {
        let entry = manifest.entry(name).ok_or_else(|| AssetError::NotFound(name.to_string()))?;
        if !entry.kind.is_articulated() {
            return Err(AssetError::Validation(format!("{name:?} is not an articulated model")));
        }
        let key = (entry.name.clone(), entry.checksum.clone().unwrap_or_default());
        if let Some(tree) = self.cache.read().unwrap().get(&key) {
            return Ok(tree.clone());
        }
        let bytes = self.fetch_entry(manifest, entry)?;
        let tree = Arc::new(match entry.kind {
            AssetKind::RobotSdf => {
                let text = std::str::from_utf8(&bytes).map_err(|e| AssetError::Parse(e.to_string()))?;
                parse_sdf(text)?
            }
            _ => parse_urdf_bytes(&bytes)?,
        });
        Ok(self.cache.write().unwrap().entry(key).or_insert(tree).clone())
    }

    pub fn cached_count(&self) -> usize {
        self.cache.read().unwrap().len()
    }
}
