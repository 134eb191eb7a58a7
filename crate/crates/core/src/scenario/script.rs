use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::geometry::Transform;
use crate::intent::IntentConfig;
use crate::message::{JointTrajectory, ObjectState, Path};

/// A reproducible desk-scale session: who is registered, what the headset
/// sees, and which plans robots publish, step by step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    #[serde(default)]
    pub name: String,
    /// Starting intent configuration; system defaults when absent.
    #[serde(default)]
    pub config: Option<IntentConfig>,
    #[serde(default)]
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    /// Absolute time in seconds; the clock advances to it before the step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    RegisterRobot {
        marker: String,
        #[serde(default)]
        model: Option<String>,
    },
    RegisterHmd {},
    RegisterObject {
        category: String,
    },
    ObserveMarker {
        label: String,
        marker_in_hmd: Transform,
        #[serde(default)]
        hmd: Option<u32>,
        #[serde(default)]
        hmd_in_anchor: Option<Transform>,
    },
    SetHmdPose {
        hmd: u32,
        pose: Transform,
    },
    SubmitNavigation {
        robot: u32,
        plan: Path,
    },
    SubmitManipulation {
        robot: u32,
        trajectory: JointTrajectory,
    },
    PublishObjectState {
        object: u32,
        state: ObjectState,
    },
    Configure {
        #[serde(default)]
        delay_seconds: Option<f64>,
        #[serde(default)]
        pose_rate_hz: Option<f64>,
    },
    AdjustHologram {
        robot: u32,
        delta: Transform,
    },
    AdvanceClock {
        seconds: f64,
    },
    /// Imports an exported log file, relative to the scenario file.
    ReplayLog {
        path: PathBuf,
    },
}

// Hand-written because `deny_unknown_fields` does not combine with
// `flatten`: `at` is split off and the rest must match one action exactly.
impl<'de> Deserialize<'de> for Step {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let mut fields = serde_json::Map::deserialize(d)?;
        let at = match fields.remove("at") {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(v.as_f64().ok_or_else(|| D::Error::custom("`at` must be a number"))?),
        };
        let action = Action::deserialize(serde_json::Value::Object(fields)).map_err(D::Error::custom)?;
        Ok(Step { at, action })
    }
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::RegisterRobot { .. } => "register_robot",
            Action::RegisterHmd {} => "register_hmd",
            Action::RegisterObject { .. } => "register_object",
            Action::ObserveMarker { .. } => "observe_marker",
            Action::SetHmdPose { .. } => "set_hmd_pose",
            Action::SubmitNavigation { .. } => "submit_navigation",
            Action::SubmitManipulation { .. } => "submit_manipulation",
            Action::PublishObjectState { .. } => "publish_object_state",
            Action::Configure { .. } => "configure",
            Action::AdjustHologram { .. } => "adjust_hologram",
            Action::AdvanceClock { .. } => "advance_clock",
            Action::ReplayLog { .. } => "replay_log",
        }
    }
}

impl ScenarioScript {
    pub fn from_json(bytes: &[u8]) -> Result<ScenarioScript, ScenarioError> {
        serde_json::from_slice(bytes)
            .map_err(|e| ScenarioError::Parse(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    /// Checks ordering and that every id refers to an entity registered by
    /// an earlier step. Ids are predicted the way the registry assigns them.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if let Some(c) = &self.config {
            c.validate().map_err(|e| ScenarioError::Parse(format!("config: {e}")))?;
        }
        let mut robots: HashMap<&str, u32> = HashMap::new();
        let (mut hmds, mut objects) = (0u32, 0u32);
        let mut last_at = 0.0f64;
        for (index, step) in self.steps.iter().enumerate() {
            let fail = |message: String| Err(ScenarioError::Step { index, message });
            if let Some(at) = step.at {
                if !at.is_finite() || at < last_at {
                    return fail(format!("at = {at} is before the previous step time {last_at}"));
                }
                last_at = at;
            }
            let robot_known = |id: u32| (id as usize) < robots.len();
            match &step.action {
                Action::RegisterRobot { marker, .. } => {
                    if marker.is_empty() {
                        return fail("marker must be non-empty".into());
                    }
                    let next = robots.len() as u32;
                    robots.entry(marker).or_insert(next);
                }
                Action::RegisterHmd {} => hmds += 1,
                Action::RegisterObject { .. } => objects += 1,
                Action::ObserveMarker { hmd: Some(h), .. } | Action::SetHmdPose { hmd: h, .. }
                    if *h >= hmds =>
                {
                    return fail(format!("hmd {h} is not registered"));
                }
                Action::SubmitNavigation { robot, .. }
                | Action::SubmitManipulation { robot, .. }
                | Action::AdjustHologram { robot, .. }
                    if !robot_known(*robot) =>
                {
                    return fail(format!("robot {robot} is not registered"));
                }
                Action::PublishObjectState { object, .. } if *object >= objects => {
                    return fail(format!("object {object} is not registered"));
                }
                Action::AdvanceClock { seconds } if !seconds.is_finite() || *seconds < 0.0 => {
                    return fail(format!("advance_clock seconds must be >= 0, got {seconds}"));
                }
                _ => {}
            }
            if let Action::AdvanceClock { seconds } = step.action {
                last_at += seconds;
            }
        }
        Ok(())
    }
}
