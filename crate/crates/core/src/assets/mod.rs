//! Robot and object models: repository manifests, URDF/SDF parsing into a
//! common kinematic tree, and forward kinematics for preview animation.

mod bundled;
mod fetch;
mod kinematics;
mod library;
mod manifest;
mod sdf;
mod urdf;
mod xml;

pub use fetch::{DefaultFetcher, Fetcher, BUNDLED_SCHEME};
pub use kinematics::{Joint, JointConfiguration, JointType, KinematicTree, Limits, Link};
pub use library::{sha256_hex, AssetLibrary};
pub use manifest::{AssetKind, ManifestEntry, RepositoryManifest, MANIFEST_FILE};
pub use sdf::{parse_sdf, SDF_DEFAULT_LIMIT};
pub use urdf::{parse_urdf, parse_urdf_bytes};

/// Default robot repository, served from files compiled into the binary.
pub const DEFAULT_ROBOT_REPOSITORY: &str = "bundled:robots";
/// Default object repository.
pub const DEFAULT_OBJECT_REPOSITORY: &str = "bundled:objects";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssetError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("structure error: {0}")]
    Structure(String),
    #[error("joint {joint:?} has unsupported type {kind:?}")]
    UnsupportedJoint { joint: String, kind: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("joint {joint:?} value {value} outside [{lower}, {upper}]")]
    Limit { joint: String, value: f64, lower: f64, upper: f64 },
    #[error("fetching {uri} failed: {reason}")]
    Fetch { uri: String, reason: String },
    #[error("checksum mismatch for {name}: manifest says {expected}, content is {actual}")]
    Integrity { name: String, expected: String, actual: String },
    #[error("validation: {0}")]
    Validation(String),
    #[error("asset not found: {0}")]
    NotFound(String),
}
