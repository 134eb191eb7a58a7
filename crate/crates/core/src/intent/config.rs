use serde::{Deserialize, Serialize};

use super::IntentError;

pub const DEFAULT_DELAY_SECONDS: f64 = 3.0;
pub const MIN_POSE_RATE_HZ: f64 = 1.0;
pub const MAX_POSE_RATE_HZ: f64 = 30.0;

/// User-tunable timing: how long execution trails the preview, and how
/// often each headset publishes its pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntentConfig {
    pub delay_seconds: f64,
    pub pose_rate_hz: f64,
}

impl Default for IntentConfig {
    fn default() -> Self {
        Self { delay_seconds: DEFAULT_DELAY_SECONDS, pose_rate_hz: MAX_POSE_RATE_HZ }
    }
}

impl IntentConfig {
    pub fn new(delay_seconds: f64, pose_rate_hz: f64) -> Result<Self, IntentError> {
        let c = Self { delay_seconds, pose_rate_hz };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), IntentError> {
        if !self.delay_seconds.is_finite() || self.delay_seconds < 0.0 {
            return Err(IntentError::Validation(format!(
                "delay_seconds must be finite and >= 0, got {}",
                self.delay_seconds
            )));
        }
        if !(MIN_POSE_RATE_HZ..=MAX_POSE_RATE_HZ).contains(&self.pose_rate_hz) {
            return Err(IntentError::Validation(format!(
                "pose_rate_hz must lie in [{MIN_POSE_RATE_HZ}, {MAX_POSE_RATE_HZ}], got {}",
                self.pose_rate_hz
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(IntentConfig::new(3.0, 30.0).is_ok());
        assert!(IntentConfig::new(0.0, 1.0).is_ok());
        assert!(IntentConfig::new(3.0, 0.5).is_err());
        assert!(IntentConfig::new(3.0, 31.0).is_err());
        assert!(IntentConfig::new(-0.1, 10.0).is_err());
        assert!(IntentConfig::new(f64::NAN, 10.0).is_err());
        assert!(IntentConfig::new(3.0, f64::NAN).is_err());
        assert_eq!(IntentConfig::default().delay_seconds, 3.0);
    }
}
