//! Marker-based mutual localization.
//!
//! The first marker ever observed becomes the spatial anchor and sits at the
//! identity. Every later marker is stored in the anchor frame, computed from
//! the observing headset's own anchor-frame pose. Marker observations use the
//! marker-in-HMD convention: `marker_in_hmd` maps marker coordinates into the
//! headset frame.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Transform;
use crate::message::Nanos;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnchorError {
    #[error("no spatial anchor established and no headset pose to localize against")]
    LocalizationUnavailable,
    #[error("marker not found: {0}")]
    MarkerNotFound(String),
    #[error("marker label must be non-empty")]
    EmptyLabel,
    #[error("transform is not a valid rigid transform")]
    InvalidTransform,
    #[error("hmd {hmd} stamp {stamp} does not follow previous stamp {previous}")]
    StampNotIncreasing { hmd: u32, stamp: Nanos, previous: Nanos },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AnchorEvent {
    /// The first marker became the anchor. `hmd_in_anchor` is the observing
    /// headset's pose derived from the observation.
    AnchorEstablished { label: String, hmd_in_anchor: Transform },
    MarkerRegistered { label: String, pose: Transform },
    MarkerUpdated { label: String, pose: Transform },
    AnchorReobserved { label: String },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AnchorRegistry {
    primary_marker: Option<String>,
    marker_poses: BTreeMap<String, Transform>,
    hologram_offsets: BTreeMap<u32, Transform>,
    #[serde(skip)]
    hmd_last_stamp: BTreeMap<u32, Nanos>,
}

impl AnchorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn primary_marker(&self) -> Option<&str> {
        self.primary_marker.as_deref()
    }

    pub fn is_anchored(&self) -> bool {
        self.primary_marker.is_some()
    }

    pub fn marker_pose(&self, label: &str) -> Option<Transform> {
        self.marker_poses.get(label).copied()
    }

    pub fn markers(&self) -> impl Iterator<Item = (&str, &Transform)> {
        self.marker_poses.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn observe_marker(
        &mut self,
        label: &str,
        marker_in_hmd: &Transform,
        hmd_in_anchor: Option<&Transform>,
    ) -> Result<AnchorEvent, AnchorError> {
        if label.is_empty() {
            return Err(AnchorError::EmptyLabel);
        }
        if !marker_in_hmd.is_valid() || hmd_in_anchor.is_some_and(|t| !t.is_valid()) {
            return Err(AnchorError::InvalidTransform);
        }
        match &self.primary_marker {
            None => {
                self.primary_marker = Some(label.to_string());
                self.marker_poses.insert(label.to_string(), Transform::IDENTITY);
                Ok(AnchorEvent::AnchorEstablished {
                    label: label.to_string(),
                    hmd_in_anchor: marker_in_hmd.inverse(),
                })
            }
            Some(primary) if primary == label => {
                Ok(AnchorEvent::AnchorReobserved { label: label.to_string() })
            }
            Some(_) => {
                let hmd = hmd_in_anchor.ok_or(AnchorError::LocalizationUnavailable)?;
                let pose = hmd.compose(marker_in_hmd);
                let label = label.to_string();
                Ok(match self.marker_poses.insert(label.clone(), pose) {
                    Some(_) => AnchorEvent::MarkerUpdated { label, pose },
                    None => AnchorEvent::MarkerRegistered { label, pose },
                })
            }
        }
    }

    /// Pose of `b` expressed in the frame of `a`.
    pub fn relative_transform(&self, a: &str, b: &str) -> Result<Transform, AnchorError> {
        let pa = self.marker_pose(a).ok_or_else(|| AnchorError::MarkerNotFound(a.to_string()))?;
        let pb = self.marker_pose(b).ok_or_else(|| AnchorError::MarkerNotFound(b.to_string()))?;
        Ok(pa.inverse().compose(&pb))
    }

    pub fn hologram_offset(&self, robot_id: u32) -> Transform {
        self.hologram_offsets.get(&robot_id).copied().unwrap_or(Transform::IDENTITY)
    }

    /// Applies a manual correction on top of any earlier ones and returns
    /// the new offset. Callers check that the robot exists.
    pub fn adjust_hologram(&mut self, robot_id: u32, delta: &Transform) -> Result<Transform, AnchorError> {
        if !delta.is_valid() {
            return Err(AnchorError::InvalidTransform);
        }
        let next = delta.compose(&self.hologram_offset(robot_id));
        self.hologram_offsets.insert(robot_id, next);
        Ok(next)
    }

    /// Where a robot hologram is drawn: its marker pose with the manual
    /// offset applied on top.
    pub fn hologram_pose(&self, marker_label: &str, robot_id: u32) -> Result<Transform, AnchorError> {
        let marker = self
            .marker_pose(marker_label)
            .ok_or_else(|| AnchorError::MarkerNotFound(marker_label.to_string()))?;
        Ok(marker.compose(&self.hologram_offset(robot_id)))
    }

    /// Checks and records an HMD sample stamp. Stamps must strictly increase
    /// per headset, and an anchor must exist.
    pub fn accept_hmd_sample(&mut self, hmd: u32, stamp: Nanos) -> Result<(), AnchorError> {
        if !self.is_anchored() {
            return Err(AnchorError::LocalizationUnavailable);
        }
        if let Some(&previous) = self.hmd_last_stamp.get(&hmd) {
            if stamp <= previous {
                return Err(AnchorError::StampNotIncreasing { hmd, stamp, previous });
            }
        }
        self.hmd_last_stamp.insert(hmd, stamp);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Quaternion, Vector3};

    fn yaw(deg: f64) -> Quaternion {
        Quaternion::from_axis_angle(&Vector3::new(0.0, 0.0, 1.0), deg.to_radians())
    }

    #[test]
    fn first_marker_becomes_identity_anchor() {
        let mut reg = AnchorRegistry::new();
        let seen = Transform::new(Vector3::new(1.0, 0.5, 0.0), yaw(30.0));
        let ev = reg.observe_marker("robot-A", &seen, None).unwrap();
        assert_eq!(reg.primary_marker(), Some("robot-A"));
        assert_eq!(reg.marker_pose("robot-A"), Some(Transform::IDENTITY));
        match ev {
            AnchorEvent::AnchorEstablished { hmd_in_anchor, .. } => {
                assert!(hmd_in_anchor.compose(&seen).approx_eq(&Transform::IDENTITY, 1e-12));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn marker_two_metres_ahead_of_hmd_at_anchor() {
        let mut reg = AnchorRegistry::new();
        reg.observe_marker("anchor", &Transform::IDENTITY, None).unwrap();
        let ev = reg
            .observe_marker(
                "robot-B",
                &Transform::from_translation(2.0, 0.0, 0.0),
                Some(&Transform::IDENTITY),
            )
            .unwrap();
        assert!(matches!(ev, AnchorEvent::MarkerRegistered { .. }));
        let pose = reg.marker_pose("robot-B").unwrap();
        assert!(pose.approx_eq(&Transform::from_translation(2.0, 0.0, 0.0), 1e-12));
    }

    #[test]
    fn later_marker_needs_hmd_pose() {
        let mut reg = AnchorRegistry::new();
        reg.observe_marker("a", &Transform::IDENTITY, None).unwrap();
        assert_eq!(
            reg.observe_marker("b", &Transform::IDENTITY, None),
            Err(AnchorError::LocalizationUnavailable)
        );
    }

    #[test]
    fn reobserving_primary_keeps_identity_and_anchor() {
        let mut reg = AnchorRegistry::new();
        reg.observe_marker("a", &Transform::IDENTITY, None).unwrap();
        let moved = Transform::from_translation(3.0, 0.0, 0.0);
        let ev = reg.observe_marker("a", &moved, Some(&moved)).unwrap();
        assert!(matches!(ev, AnchorEvent::AnchorReobserved { .. }));
        assert_eq!(reg.marker_pose("a"), Some(Transform::IDENTITY));
        reg.observe_marker("b", &moved, Some(&Transform::IDENTITY)).unwrap();
        assert_eq!(reg.primary_marker(), Some("a"));
    }

    #[test]
    fn reobservation_overwrites_secondary() {
        let mut reg = AnchorRegistry::new();
        reg.observe_marker("a", &Transform::IDENTITY, None).unwrap();
        let hmd = Transform::IDENTITY;
        reg.observe_marker("b", &Transform::from_translation(1.0, 0.0, 0.0), Some(&hmd)).unwrap();
        let ev =
            reg.observe_marker("b", &Transform::from_translation(1.5, 0.0, 0.0), Some(&hmd)).unwrap();
        assert!(matches!(ev, AnchorEvent::MarkerUpdated { .. }));
        assert_eq!(reg.marker_pose("b").unwrap().translation.x, 1.5);
    }

    #[test]
    fn relative_transforms() {
        let mut reg = AnchorRegistry::new();
        reg.observe_marker("a", &Transform::IDENTITY, None).unwrap();
        let hmd = Transform::new(Vector3::new(0.5, -1.0, 0.0), yaw(45.0));
        reg.observe_marker("b", &Transform::new(Vector3::new(2.0, 0.0, 0.0), yaw(90.0)), Some(&hmd))
            .unwrap();
        assert!(reg.relative_transform("a", "a").unwrap().approx_eq(&Transform::IDENTITY, 1e-12));
        assert_eq!(reg.relative_transform("a", "b").unwrap(), reg.marker_pose("b").unwrap());
        assert_eq!(
            reg.relative_transform("a", "zz"),
            Err(AnchorError::MarkerNotFound("zz".into()))
        );
    }

    #[test]
    fn hologram_adjustments_compose() {
        let mut reg = AnchorRegistry::new();
        let first = reg.adjust_hologram(0, &Transform::from_translation(0.05, 0.0, 0.0)).unwrap();
        assert_eq!(first.translation, Vector3::new(0.05, 0.0, 0.0));
        let unchanged = reg.adjust_hologram(0, &Transform::IDENTITY).unwrap();
        assert!(unchanged.approx_eq(&first, 0.0));
        let turn = Transform::from_rotation(yaw(90.0));
        let second = reg.adjust_hologram(0, &turn).unwrap();
        assert!(second.approx_eq(&turn.compose(&first), 1e-15));
        assert!((second.translation.y - 0.05).abs() < 1e-12);
    }

    #[test]
    fn hmd_samples_require_anchor_and_increase() {
        let mut reg = AnchorRegistry::new();
        assert_eq!(reg.accept_hmd_sample(0, 0), Err(AnchorError::LocalizationUnavailable));
        reg.observe_marker("a", &Transform::IDENTITY, None).unwrap();
        reg.accept_hmd_sample(0, 0).unwrap();
        reg.accept_hmd_sample(0, 5).unwrap();
        assert!(matches!(reg.accept_hmd_sample(0, 5), Err(AnchorError::StampNotIncreasing { .. })));
        reg.accept_hmd_sample(1, 1).unwrap();
    }
}
