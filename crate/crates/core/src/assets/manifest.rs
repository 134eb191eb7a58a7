use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::AssetError;
use crate::geometry::Vector3;

/// File name appended when a repository uri names a directory.
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    RobotUrdf,
    RobotSdf,
    ObjectFbx,
    /// Articulated object described like a robot.
    ObjectUrdf,
}

impl AssetKind {
    pub fn is_articulated(self) -> bool {
        self != AssetKind::ObjectFbx
    }

    pub fn is_robot(self) -> bool {
        matches!(self, AssetKind::RobotUrdf | AssetKind::RobotSdf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub kind: AssetKind,
    /// Relative to the manifest's location unless absolute.
    pub uri: String,
    /// `sha256:<hex>`; optional only for FBX objects.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
    /// Extent in meters, for drawing objects as primitives.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounding_box: Option<Vector3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepositoryManifest {
    pub repository: String,
    pub entries: Vec<ManifestEntry>,
    /// Where the manifest was fetched from; entry uris resolve against it.
    #[serde(skip)]
    pub source: String,
}

impl RepositoryManifest {
    pub fn from_json(bytes: &[u8], source: &str) -> Result<RepositoryManifest, AssetError> {
        let mut m: RepositoryManifest =
            serde_json::from_slice(bytes).map_err(|e| AssetError::Parse(format!("manifest: {e}")))?;
        m.source = source.to_string();
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), AssetError> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.name.is_empty() || e.uri.is_empty() {
                return Err(AssetError::Validation("entry name and uri must be non-empty".into()));
            }
            if !seen.insert(e.name.as_str()) {
                return Err(AssetError::Validation(format!("duplicate entry name {:?}", e.name)));
            }
            match &e.checksum {
                Some(c) => {
                    let hex = c.strip_prefix("sha256:").unwrap_or("");
                    if hex.len() != 64 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
                        return Err(AssetError::Validation(format!(
                            "entry {:?}: checksum must be sha256:<64 hex digits>",
                            e.name
                        )));
                    }
                }
                None if e.kind.is_articulated() => {
                    return Err(AssetError::Validation(format!("entry {:?} needs a checksum", e.name)))
                }
                None => {}
            }
        }
        Ok(())
    }

    pub fn entry(&self, name: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    /// Absolute uri of an entry's resource.
    pub fn resolve_uri(&self, entry: &ManifestEntry) -> String {
        let absolute = entry.uri.contains("://")
            || entry.uri.starts_with('/')
            || entry.uri.starts_with(super::BUNDLED_SCHEME);
        if absolute {
            return entry.uri.clone();
        }
        match self.source.rfind('/') {
            Some(i) => format!("{}/{}", &self.source[..i], entry.uri),
            None => match self.source.split_once(':') {
                Some((scheme, _)) if scheme.len() > 1 => format!("{scheme}:{}", entry.uri),
                _ => entry.uri.clone(),
            },
        }
    }
}

/// Manifest location for a repository uri naming either a directory or a
/// `.json` file.
pub(super) fn manifest_uri(repository: &str) -> String {
    if repository.ends_with(".json") {
        repository.to_string()
    } else {
        format!("{}/{MANIFEST_FILE}", repository.trim_end_matches('/'))
    }
}
