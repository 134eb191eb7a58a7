//! Typed payloads for the robot, HMD and object topics together with their
//! canonical JSON codec.
//!
//! Field names follow the ROS message definitions so payloads can be handed
//! to a ROS-side bridge unchanged. Two simplifications apply: header stamps
//! are integer nanoseconds, and `time_from_start` is decimal seconds.

pub(crate) mod canonical;
mod codec;
mod types;
mod validate;

pub use crate::geometry::{Quaternion, Vector3};
pub use codec::{decode, encode, CodecError};
pub use types::*;
pub use validate::{validate, Violation};
