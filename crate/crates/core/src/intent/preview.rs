//! Hologram animation along a planned action.
//!
//! Navigation previews move at constant speed along the waypoint polyline
//! and last `max(delay, native duration)`. Manipulation previews play the
//! joint trajectory at its own timing with piecewise-linear interpolation.
//! Both clamp to the first/last sample outside their time range.

use serde::{Deserialize, Serialize};

use super::{IntentPayload, ScheduledIntent};
use crate::message::{JointTrajectory, Path, Pose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PreviewState {
    Navigation { pose: Pose },
    Manipulation { joint_names: Vec<String>, positions: Vec<f64> },
}

/// Hologram state `t` seconds after the preview started.
pub fn sample_preview(intent: &ScheduledIntent, t: f64) -> PreviewState {
    match &intent.payload {
        IntentPayload::Navigation(path) => {
            PreviewState::Navigation { pose: sample_path(path, t, intent.preview_duration_seconds()) }
        }
        IntentPayload::Manipulation(traj) => PreviewState::Manipulation {
            joint_names: traj.joint_names.clone(),
            positions: sample_trajectory(traj, t),
        },
    }
}

/// Constant-speed arc-length interpolation over `duration` seconds.
pub fn sample_path(path: &Path, t: f64, duration: f64) -> Pose {
    let poses = &path.poses;
    let Some(first) = poses.first() else {
        return Pose::IDENTITY;
    };
    let last = poses.last().unwrap();
    if t.is_nan() || t <= 0.0 {
        return first.pose;
    }
    if t >= duration {
        return last.pose;
    }
    let cumulative: Vec<f64> = std::iter::once(0.0)
        .chain(poses.windows(2).scan(0.0, |acc, w| {
            *acc += w[0].pose.position.distance(&w[1].pose.position);
            Some(*acc)
        }))
        .collect();
    let total = *cumulative.last().unwrap();
    if total <= 0.0 {
        return first.pose;
    }
    let target = total * (t / duration);
    for (i, w) in poses.windows(2).enumerate() {
        let (from, to) = (cumulative[i], cumulative[i + 1]);
        if target <= to && to > from {
            let s = (target - from) / (to - from);
            return Pose {
                position: w[0].pose.position.lerp(&w[1].pose.position, s),
                orientation: w[0].pose.orientation.slerp(&w[1].pose.orientation, s),
            };
        }
    }
    last.pose
}

/// Piecewise-linear joint positions at `t` seconds from start.
pub fn sample_trajectory(traj: &JointTrajectory, t: f64) -> Vec<f64> {
    let points = &traj.points;
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let last = points.last().unwrap();
    if t.is_nan() || t <= first.time_from_start {
        return first.positions.clone();
    }
    if t >= last.time_from_start {
        return last.positions.clone();
    }
    let k = points.partition_point(|p| p.time_from_start <= t) - 1;
    let (a, b) = (&points[k], &points[k + 1]);
    let s = (t - a.time_from_start) / (b.time_from_start - a.time_from_start);
    a.positions.iter().zip(&b.positions).map(|(x, y)| x + (y - x) * s).collect()
}
