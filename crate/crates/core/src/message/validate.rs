use std::collections::HashSet;
use std::fmt;

use super::types::*;
use crate::geometry::{Quaternion, Vector3};

/// One broken invariant, located by a JSON-style field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Default)]
struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, field: impl Into<String>, rule: impl Into<String>) {
        self.out.push(Violation { field: field.into(), rule: rule.into() });
    }

    fn vector(&mut self, path: &str, v: &Vector3) {
        if !v.is_finite() {
            self.fail(path, "components must be finite");
        }
    }

    fn quaternion(&mut self, path: &str, q: &Quaternion) {
        if !q.is_unit() {
            self.fail(path, "quaternion norm must be 1 within 1e-6");
        }
    }

    fn pose(&mut self, path: &str, p: &Pose) {
        self.vector(&format!("{path}.position"), &p.position);
        self.quaternion(&format!("{path}.orientation"), &p.orientation);
    }

    fn header(&mut self, path: &str, h: &Header) {
        if h.frame_id.is_empty() {
            self.fail(format!("{path}.frame_id"), "frame_id must be non-empty");
        }
    }

    fn finite_all(&mut self, path: &str, xs: &[f64]) {
        if xs.iter().any(|x| !x.is_finite()) {
            self.fail(path, "values must be finite");
        }
    }

    fn names(&mut self, path: &str, names: &[String]) {
        let mut seen = HashSet::new();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                self.fail(format!("{path}[{i}]"), "joint name must be non-empty");
            } else if !seen.insert(n.as_str()) {
                self.fail(format!("{path}[{i}]"), format!("duplicate joint name {n:?}"));
            }
        }
    }

    fn pose_stamped(&mut self, path: &str, m: &PoseStamped) {
        self.header(&format!("{path}header"), &m.header);
        self.pose(&format!("{path}pose"), &m.pose);
    }

    fn path(&mut self, m: &Path) {
        self.header("header", &m.header);
        let mut last: Option<Nanos> = None;
        for (i, p) in m.poses.iter().enumerate() {
            self.pose_stamped(&format!("poses[{i}]."), p);
            if let Some(prev) = last {
                if p.header.stamp < prev {
                    self.fail(
                        format!("poses[{i}].header.stamp"),
                        "waypoint stamps must be non-decreasing",
                    );
                }
            }
            last = Some(p.header.stamp);
        }
    }

    fn joint_trajectory(&mut self, m: &JointTrajectory) {
        self.header("header", &m.header);
        self.names("joint_names", &m.joint_names);
        let n = m.joint_names.len();
        let mut last: Option<f64> = None;
        for (i, p) in m.points.iter().enumerate() {
            let at = format!("points[{i}]");
            if p.positions.len() != n {
                self.fail(
                    format!("{at}.positions"),
                    format!("positions length {} must equal joint_names length {n}", p.positions.len()),
                );
            }
            for (field, xs) in [("velocities", &p.velocities), ("accelerations", &p.accelerations)] {
                if !xs.is_empty() && xs.len() != p.positions.len() {
                    self.fail(
                        format!("{at}.{field}"),
                        format!("{field} length must be 0 or equal positions length"),
                    );
                }
            }
            self.finite_all(&format!("{at}.positions"), &p.positions);
            self.finite_all(&format!("{at}.velocities"), &p.velocities);
            self.finite_all(&format!("{at}.accelerations"), &p.accelerations);
            if !p.time_from_start.is_finite() || p.time_from_start < 0.0 {
                self.fail(format!("{at}.time_from_start"), "time_from_start must be finite and >= 0");
            }
            if let Some(prev) = last {
                if p.time_from_start <= prev {
                    self.fail(
                        format!("{at}.time_from_start"),
                        "time_from_start must be strictly increasing",
                    );
                }
            }
            last = Some(p.time_from_start);
        }
    }

    fn object_state(&mut self, m: &ObjectState) {
        if m.category.is_empty() {
            self.fail("category", "category must be non-empty");
        }
        self.pose("pose", &m.pose);
        self.names("joint_names", &m.joint_names);
        if m.joint_names.len() != m.joint_positions.len() {
            self.fail("joint_positions", "joint_positions length must equal joint_names length");
        }
        self.finite_all("joint_positions", &m.joint_positions);
    }
}

/// Returns every invariant the message violates. An empty list means valid.
pub fn validate(message: &Message) -> Vec<Violation> {
    let mut c = Checker::default();
    match message {
        Message::PoseStamped(m) => c.pose_stamped("", m),
        Message::Path(m) => c.path(m),
        Message::JointTrajectory(m) => c.joint_trajectory(m),
        Message::ObjectState(m) => c.object_state(m),
        Message::IntentEvent(_) => {}
    }
    c.out
}
