use serde::{Deserialize, Serialize};

use super::canonical::{canon_f64, canon_f64_vec};
use crate::geometry::{Quaternion, Transform, Vector3};

/// Nanoseconds since the scenario epoch.
pub type Nanos = u64;

pub const NANOS_PER_SECOND: f64 = 1e9;

pub fn seconds_to_nanos(seconds: f64) -> Nanos {
    (seconds * NANOS_PER_SECOND).round() as Nanos
}

pub fn nanos_to_seconds(nanos: Nanos) -> f64 {
    nanos as f64 / NANOS_PER_SECOND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub stamp: Nanos,
    pub frame_id: String,
}

impl Header {
    pub fn new(stamp: Nanos, frame_id: impl Into<String>) -> Self {
        Self { stamp, frame_id: frame_id.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub position: Vector3,
    pub orientation: Quaternion,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { position: Vector3::ZERO, orientation: Quaternion::IDENTITY };
}

impl From<Transform> for Pose {
    fn from(t: Transform) -> Self {
        Pose { position: t.translation, orientation: t.rotation }
    }
}

impl From<Pose> for Transform {
    fn from(p: Pose) -> Self {
        Transform { translation: p.position, rotation: p.orientation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseStamped {
    pub header: Header,
    pub pose: Pose,
}

/// A navigation plan: waypoints with their planned arrival stamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Path {
    pub header: Header,
    pub poses: Vec<PoseStamped>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointTrajectoryPoint {
    #[serde(serialize_with = "canon_f64_vec")]
    pub positions: Vec<f64>,
    #[serde(serialize_with = "canon_f64_vec")]
    pub velocities: Vec<f64>,
    #[serde(serialize_with = "canon_f64_vec")]
    pub accelerations: Vec<f64>,
    /// Seconds since the start of the trajectory.
    #[serde(serialize_with = "canon_f64")]
    pub time_from_start: f64,
}

impl JointTrajectoryPoint {
    pub fn at(time_from_start: f64, positions: Vec<f64>) -> Self {
        Self { positions, velocities: Vec::new(), accelerations: Vec::new(), time_from_start }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointTrajectory {
    pub header: Header,
    pub joint_names: Vec<String>,
    pub points: Vec<JointTrajectoryPoint>,
}

/// Pose and articulation of a perceived object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectState {
    pub category: String,
    pub pose: Pose,
    pub joint_names: Vec<String>,
    #[serde(serialize_with = "canon_f64_vec")]
    pub joint_positions: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentKind {
    Navigation,
    Manipulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentPhase {
    PreviewStarted,
    ExecutionStarted,
    Completed,
    /// Superseded by a newer intent for the same robot before execution.
    Cancelled,
}

/// Lifecycle notification published on `/system/intent_events`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentEvent {
    pub intent_id: u64,
    pub robot_id: u32,
    pub kind: IntentKind,
    pub phase: IntentPhase,
    pub stamp: Nanos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    PoseStamped,
    Path,
    JointTrajectory,
    ObjectState,
    IntentEvent,
}

impl MessageKind {
    pub const ALL: [MessageKind; 5] = [
        MessageKind::PoseStamped,
        MessageKind::Path,
        MessageKind::JointTrajectory,
        MessageKind::ObjectState,
        MessageKind::IntentEvent,
    ];

    /// Top-level JSON keys, in canonical order.
    pub fn fields(self) -> &'static [&'static str] {
        match self {
            MessageKind::PoseStamped => &["header", "pose"],
            MessageKind::Path => &["header", "poses"],
            MessageKind::JointTrajectory => &["header", "joint_names", "points"],
            MessageKind::ObjectState => &["category", "pose", "joint_names", "joint_positions"],
            MessageKind::IntentEvent => &["intent_id", "robot_id", "kind", "phase", "stamp"],
        }
    }

    /// The equivalent ROS message type name.
    pub fn ros_type(self) -> &'static str {
        match self {
            MessageKind::PoseStamped => "geometry_msgs/PoseStamped",
            MessageKind::Path => "nav_msgs/Path",
            MessageKind::JointTrajectory => "trajectory_msgs/JointTrajectory",
            MessageKind::ObjectState => "holointent_msgs/ObjectState",
            MessageKind::IntentEvent => "holointent_msgs/IntentEvent",
        }
    }
}

impl std::fmt::Display for MessageKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.ros_type())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    PoseStamped(PoseStamped),
    Path(Path),
    JointTrajectory(JointTrajectory),
    ObjectState(ObjectState),
    IntentEvent(IntentEvent),
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::PoseStamped(_) => MessageKind::PoseStamped,
            Message::Path(_) => MessageKind::Path,
            Message::JointTrajectory(_) => MessageKind::JointTrajectory,
            Message::ObjectState(_) => MessageKind::ObjectState,
            Message::IntentEvent(_) => MessageKind::IntentEvent,
        }
    }
}

macro_rules! message_from {
    ($($ty:ident),*) => {
        $(impl From<$ty> for Message {
            fn from(m: $ty) -> Self {
                Message::$ty(m)
            }
        })*
    };
}

message_from!(PoseStamped, Path, JointTrajectory, ObjectState, IntentEvent);
