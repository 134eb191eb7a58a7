//! System configuration loaded from TOML.
//!
//! ```toml
//! [intent]
//! delay_seconds = 3.0
//! pose_rate_hz = 30.0
//!
//! [assets]
//! robot_repository = "bundled:robots"
//! object_repository = "bundled:objects"
//!
//! [gateway]
//! bind = "127.0.0.1:7400"
//! ws_bind = "127.0.0.1:7401"
//!
//! [broker]
//! data_dir = "./data"
//! replicas = 2
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assets::{DEFAULT_OBJECT_REPOSITORY, DEFAULT_ROBOT_REPOSITORY};
use crate::intent::IntentConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssetSettings {
    pub robot_repository: String,
    pub object_repository: String,
}

impl Default for AssetSettings {
    fn default() -> Self {
        Self {
            robot_repository: DEFAULT_ROBOT_REPOSITORY.into(),
            object_repository: DEFAULT_OBJECT_REPOSITORY.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatewaySettings {
    pub bind: String,
    /// WebSocket listener for browser clients; disabled when absent.
    pub ws_bind: Option<String>,
}

impl Default for GatewaySettings {
    fn default() -> Self {
        Self { bind: "127.0.0.1:7400".into(), ws_bind: Some("127.0.0.1:7401".into()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BrokerSettings {
    /// Log directory; in-memory when absent.
    pub data_dir: Option<PathBuf>,
    pub replicas: usize,
}

impl Default for BrokerSettings {
    fn default() -> Self {
        Self { data_dir: None, replicas: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub intent: IntentConfig,
    pub assets: AssetSettings,
    pub gateway: GatewaySettings,
    pub broker: BrokerSettings,
}

impl SystemConfig {
    pub fn from_toml(text: &str) -> Result<SystemConfig, ConfigError> {
        let config: SystemConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path`; a missing file yields the defaults.
    pub fn load(path: &Path) -> Result<SystemConfig, ConfigError> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::from_toml(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                tracing::warn!(path = %path.display(), "config file not found, using defaults");
                Ok(SystemConfig::default())
            }
            Err(source) => Err(ConfigError::Io { path: path.to_path_buf(), source }),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, reason: String| Err(ConfigError::Invalid { field, reason });
        let i = &self.intent;
        if !i.delay_seconds.is_finite() || i.delay_seconds < 0.0 {
            return invalid("intent.delay_seconds", format!("must be >= 0, got {}", i.delay_seconds));
        }
        if i.validate().is_err() {
            return invalid("intent.pose_rate_hz", format!("must lie in [1, 30], got {}", i.pose_rate_hz));
        }
        if self.assets.robot_repository.is_empty() {
            return invalid("assets.robot_repository", "must be non-empty".into());
        }
        if self.assets.object_repository.is_empty() {
            return invalid("assets.object_repository", "must be non-empty".into());
        }
        if self.gateway.bind.parse::<std::net::SocketAddr>().is_err() {
            return invalid("gateway.bind", format!("not a socket address: {:?}", self.gateway.bind));
        }
        if let Some(ws) = &self.gateway.ws_bind {
            if ws.parse::<std::net::SocketAddr>().is_err() {
                return invalid("gateway.ws_bind", format!("not a socket address: {ws:?}"));
            }
        }
        if self.broker.replicas == 0 {
            return invalid("broker.replicas", "must be at least 1".into());
        }
        Ok(())
    }
}
