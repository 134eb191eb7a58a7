use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::message::{IntentKind, Nanos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    Logical,
    Wall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentReport {
    pub intent_id: u64,
    pub robot_id: u32,
    pub kind: IntentKind,
    pub preview_stamp: Nanos,
    pub execution_stamp: Option<Nanos>,
    pub completed_stamp: Option<Nanos>,
    pub cancelled: bool,
    /// `execution_stamp - preview_stamp`.
    pub lead_time_ns: Option<Nanos>,
    pub lead_time_seconds: Option<f64>,
    /// Clock reading when execution was actually released, minus the
    /// preview stamp. Equal to the lead time under the logical clock.
    pub observed_lead_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRateReport {
    pub hmd_id: u32,
    pub rate_hz: f64,
    pub window_seconds: f64,
    pub records: u64,
    /// `floor(window * rate)`.
    pub expected: u64,
    /// Records within one of the expectation.
    pub compliant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepError {
    pub step: usize,
    pub op: String,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub clock: ClockMode,
    pub final_time_ns: Nanos,
    pub intents: Vec<IntentReport>,
    pub topic_counts: BTreeMap<String, u64>,
    pub pose_rate: Vec<PoseRateReport>,
    pub errors: Vec<StepError>,
}

impl RunReport {
    /// Canonical pretty JSON; identical runs give identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
