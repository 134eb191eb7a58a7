use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use super::AssetError;
use crate::geometry::{Quaternion, Transform, Vector3};

/// Joint name to position (radians or meters).
pub type JointConfiguration = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JointType {
    Revolute,
    Continuous,
    Prismatic,
    Fixed,
}

impl JointType {
    pub fn is_moving(self) -> bool {
        self != JointType::Fixed
    }

    pub fn is_bounded(self) -> bool {
        matches!(self, JointType::Revolute | JointType::Prismatic)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JointType::Revolute => "revolute",
            JointType::Continuous => "continuous",
            JointType::Prismatic => "prismatic",
            JointType::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Limits {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub name: String,
    /// Mesh file reference; never loaded.
    pub visual: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Joint {
    pub name: String,
    pub kind: JointType,
    pub parent: String,
    pub child: String,
    /// Child frame relative to the parent link frame at zero position.
    pub origin: Transform,
    /// Unit axis in the joint frame. Ignored for fixed joints.
    pub axis: Vector3,
    pub limits: Option<Limits>,
}

impl Joint {
    /// Transform contributed by moving the joint to `position`.
    pub fn motion(&self, position: f64) -> Transform {
        match self.kind {
            JointType::Revolute | JointType::Continuous => {
                Transform::from_rotation(Quaternion::from_axis_angle(&self.axis, position))
            }
            JointType::Prismatic => {
                let t = self.axis.scale(position);
                Transform::from_translation(t.x, t.y, t.z)
            }
            JointType::Fixed => Transform::IDENTITY,
        }
    }
}

/// A validated tree of links connected by joints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinematicTree {
    name: String,
    links: Vec<Link>,
    joints: Vec<Joint>,
    root: String,
    /// Joint indices in parent-before-child order.
    #[serde(skip)]
    order: Vec<usize>,
}

impl KinematicTree {
    /// Checks every structural invariant and normalizes moving-joint axes.
    pub fn new(
        name: impl Into<String>,
        links: Vec<Link>,
        mut joints: Vec<Joint>,
    ) -> Result<KinematicTree, AssetError> {
        let structure = |m: String| Err(AssetError::Structure(m));
        if links.is_empty() {
            return structure("empty model: no links".into());
        }
        let mut link_names = HashSet::new();
        for l in &links {
            if !link_names.insert(l.name.as_str()) {
                return structure(format!("duplicate link {:?}", l.name));
            }
        }
        let mut joint_names = HashSet::new();
        let mut parent_of: HashMap<&str, &str> = HashMap::new();
        for j in &joints {
            if !joint_names.insert(j.name.as_str()) {
                return structure(format!("duplicate joint {:?}", j.name));
            }
            for end in [&j.parent, &j.child] {
                if !link_names.contains(end.as_str()) {
                    return structure(format!("joint {:?} references unknown link {end:?}", j.name));
                }
            }
            if parent_of.insert(&j.child, &j.name).is_some() {
                return structure(format!("multiple parents for link {:?}", j.child));
            }
        }
        let roots: Vec<&str> =
            links.iter().map(|l| l.name.as_str()).filter(|n| !parent_of.contains_key(n)).collect();
        let root = match roots.as_slice() {
            [] => return structure("cycle: every link has a parent".into()),
            [only] => only.to_string(),
            many => return structure(format!("roots: expected exactly one, found {many:?}")),
        };

        let mut children: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, j) in joints.iter().enumerate() {
            children.entry(j.parent.as_str()).or_default().push(i);
        }
        let mut order = Vec::with_capacity(joints.len());
        let mut stack = vec![root.as_str()];
        while let Some(link) = stack.pop() {
            for &i in children.get(link).into_iter().flatten() {
                order.push(i);
                stack.push(&joints[i].child);
            }
        }
        if order.len() != joints.len() {
            return structure("cycle: some links are unreachable from the root".into());
        }

        for j in &mut joints {
            if !j.origin.is_valid() {
                return structure(format!("joint {:?} has an invalid origin", j.name));
            }
            if j.kind.is_moving() {
                j.axis = match j.axis.normalized() {
                    Some(a) => a,
                    None => return structure(format!("joint {:?} has a zero axis", j.name)),
                };
            }
            if let Some(l) = j.limits {
                if l.lower.is_nan() || l.upper.is_nan() || l.lower > l.upper {
                    return structure(format!(
                        "joint {:?} limits lower {} > upper {}",
                        j.name, l.lower, l.upper
                    ));
                }
            }
            if j.kind.is_bounded() && j.limits.is_none() {
                return structure(format!("joint {:?} of type {} needs limits", j.name, j.kind.as_str()));
            }
        }
        Ok(KinematicTree { name: name.into(), links, joints, root, order })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn joint(&self, name: &str) -> Option<&Joint> {
        self.joints.iter().find(|j| j.name == name)
    }

    pub fn moving_joints(&self) -> impl Iterator<Item = &Joint> {
        self.joints.iter().filter(|j| j.kind.is_moving())
    }

    /// Every moving joint at zero, or at the nearest limit when zero lies
    /// outside it.
    pub fn home_configuration(&self) -> JointConfiguration {
        self.moving_joints()
            .map(|j| {
                let q = j.limits.map_or(0.0, |l| 0.0f64.clamp(l.lower, l.upper));
                (j.name.clone(), q)
            })
            .collect()
    }

    /// Pose of every link in the root frame.
    pub fn forward_kinematics(
        &self,
        config: &JointConfiguration,
    ) -> Result<BTreeMap<String, Transform>, AssetError> {
        let mut poses = BTreeMap::new();
        poses.insert(self.root.clone(), Transform::IDENTITY);
        for &i in &self.order {
            let j = &self.joints[i];
            let q = if j.kind.is_moving() {
                let q = *config
                    .get(&j.name)
                    .ok_or_else(|| AssetError::Config(format!("missing value for joint {:?}", j.name)))?;
                if !q.is_finite() {
                    return Err(AssetError::Config(format!("joint {:?} value is not finite", j.name)));
                }
                if let (true, Some(l)) = (j.kind.is_bounded(), j.limits) {
                    if q < l.lower || q > l.upper {
                        return Err(AssetError::Limit {
                            joint: j.name.clone(),
                            value: q,
                            lower: l.lower,
                            upper: l.upper,
                        });
                    }
                }
                q
            } else {
                0.0
            };
            let parent = poses[&j.parent];
            poses.insert(j.child.clone(), parent.compose(&j.origin).compose(&j.motion(q)));
        }
        Ok(poses)
    }

    /// Same links and joints, with transforms, axes and limits equal within
    /// `tol`. Joint order and visuals are ignored.
    pub fn equivalent(&self, other: &KinematicTree, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol || a == b;
        let links = |t: &KinematicTree| t.links.iter().map(|l| l.name.clone()).collect::<HashSet<_>>();
        self.root == other.root
            && links(self) == links(other)
            && self.joints.len() == other.joints.len()
            && self.joints.iter().all(|a| {
                other.joint(&a.name).is_some_and(|b| {
                    a.kind == b.kind
                        && a.parent == b.parent
                        && a.child == b.child
                        && a.origin.approx_eq(&b.origin, tol)
                        && (!a.kind.is_moving() || (a.axis - b.axis).norm() <= tol)
                        && match (a.limits, b.limits) {
                            (Some(x), Some(y)) => close(x.lower, y.lower) && close(x.upper, y.upper),
                            (None, None) => true,
                            _ => false,
                        }
                })
            })
    }
}
