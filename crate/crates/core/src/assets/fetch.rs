use std::io::Read;
use std::time::Duration;

use super::{bundled, AssetError};

/// Scheme for resources compiled into the library.
pub const BUNDLED_SCHEME: &str = "bundled:";

const MAX_RESOURCE_BYTES: u64 = 64 * 1024 * 1024;

/// Retrieves raw bytes for a resource uri.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, uri: &str) -> Result<Vec<u8>, AssetError>;
}

/// Handles `bundled:`, `file://`, plain paths, and `http(s)://`.
pub struct DefaultFetcher {
    agent: ureq::Agent,
}

impl Default for DefaultFetcher {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(20)))
            .build()
            .into();
        Self { agent }
    }
}

impl Fetcher for DefaultFetcher {
    fn fetch(&self, uri: &str) -> Result<Vec<u8>, AssetError> {
        let fail = |reason: String| AssetError::Fetch { uri: uri.to_string(), reason };
        if let Some(path) = uri.strip_prefix(BUNDLED_SCHEME) {
            return bundled::get(path)
                .map(<[u8]>::to_vec)
                .ok_or_else(|| fail("no such bundled resource".into()));
        }
        if uri.starts_with("http://") || uri.starts_with("https://") {
            let mut response = self.agent.get(uri).call().map_err(|e| fail(e.to_string()))?;
            let mut out = Vec::new();
            response
                .body_mut()
                .as_reader()
                .take(MAX_RESOURCE_BYTES)
                .read_to_end(&mut out)
                .map_err(|e| fail(e.to_string()))?;
            return Ok(out);
        }
        let path = uri.strip_prefix("file://").unwrap_or(uri);
        if uri.contains("://") && !uri.starts_with("file://") {
            return Err(fail("unsupported scheme".into()));
        }
        std::fs::read(path).map_err(|e| fail(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_and_files() {
        let f = DefaultFetcher::default();
        assert!(!f.fetch("bundled:robots/manifest.json").unwrap().is_empty());
        assert!(matches!(f.fetch("bundled:nope"), Err(AssetError::Fetch { .. })));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        std::fs::write(&p, b"hi").unwrap();
        assert_eq!(f.fetch(p.to_str().unwrap()).unwrap(), b"hi");
        assert_eq!(f.fetch(&format!("file://{}", p.display())).unwrap(), b"hi");
        assert!(matches!(f.fetch("ftp://host/x"), Err(AssetError::Fetch { .. })));
    }

    #[test]
    fn unreachable_http_is_fetch_error() {
        let f = DefaultFetcher::default();
        assert!(matches!(f.fetch("http://127.0.0.1:9/manifest.json"), Err(AssetError::Fetch { .. })));
    }
}
