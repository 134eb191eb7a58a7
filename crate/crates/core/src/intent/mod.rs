//! Preview-before-execute scheduling of robot intents.
//!
//! Every submitted plan is previewed immediately and released for
//! execution after the configured delay. The scheduler is a pure state
//! machine driven by explicit timestamps; publishing its events is left to
//! the caller.

mod config;
mod preview;
mod rate;
mod scheduler;

pub use config::{IntentConfig, DEFAULT_DELAY_SECONDS, MAX_POSE_RATE_HZ, MIN_POSE_RATE_HZ};
pub use preview::{sample_path, sample_preview, sample_trajectory, PreviewState};
pub use rate::PoseRateGate;
pub use scheduler::{IntentPayload, IntentScheduler, IntentStatus, ScheduledIntent};

use crate::message::Nanos;

/// Topic carrying every [`crate::message::IntentEvent`].
pub const INTENT_EVENTS_TOPIC: &str = "/system/intent_events";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntentError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("clock went backwards: {now} < {last}")]
    Clock { now: Nanos, last: Nanos },
    #[error("robot not found: {0}")]
    RobotNotFound(u32),
    #[error("joint {joint:?} is not part of the model for robot {robot_id}")]
    UnknownJoint { robot_id: u32, joint: String },
    #[error("robot {0} has no kinematic model loaded")]
    ModelNotLoaded(u32),
    #[error("intent not found: {0}")]
    IntentNotFound(u64),
}
