//! SDF reader. Poses are converted so the result uses URDF conventions:
//! each joint origin is relative to its parent link's frame, and each child
//! link frame coincides with its joint frame.

use std::collections::HashMap;

use roxmltree::Node;

use super::kinematics::{Joint, JointType, KinematicTree, Limits, Link};
use super::xml::{child, children, float, floats, parse_document, pose, required_attr, text, vector};
use super::AssetError;
use crate::geometry::{Transform, Vector3};

/// Limit SDF assumes when a revolute or prismatic joint declares none.
pub const SDF_DEFAULT_LIMIT: f64 = 1e16;

const MODEL_FRAME: &str = "__model__";

struct RawPose<'a> {
    relative_to: Option<&'a str>,
    pose: Transform,
}

fn raw_pose<'a>(node: Node<'a, '_>) -> Result<Option<RawPose<'a>>, AssetError> {
    let Some(p) = child(node, "pose") else {
        return Ok(None);
    };
    let [x, y, z, r, pi, ya] = floats::<6>(text(p), "pose")?;
    let relative_to = p.attribute("relative_to").filter(|f| !f.is_empty());
    Ok(Some(RawPose { relative_to, pose: pose([x, y, z], [r, pi, ya]) }))
}

pub fn parse_sdf(source: &str) -> Result<KinematicTree, AssetError> {
    let doc = parse_document(source)?;
    let root = doc.root_element();
    if !root.has_tag_name("sdf") {
        return Err(AssetError::Parse(format!(
            "root element must be <sdf>, found <{}>",
            root.tag_name().name()
        )));
    }
    let model = child(root, "model").ok_or_else(|| AssetError::Parse("no <model> in <sdf>".into()))?;
    let name = model.attribute("name").unwrap_or_default();

    let mut links = Vec::new();
    let mut raw_link_poses = HashMap::new();
    for node in children(model, "link") {
        let link_name = required_attr(node, "name")?;
        let visual = child(node, "visual")
            .and_then(|v| child(v, "geometry"))
            .and_then(|g| child(g, "mesh"))
            .and_then(|m| child(m, "uri"))
            .map(|u| text(u).to_string());
        raw_link_poses.insert(link_name, raw_pose(node)?);
        links.push(Link { name: link_name.to_string(), visual });
    }
    let model_poses = resolve_link_poses(&raw_link_poses)?;

    let mut raw_joints = Vec::new();
    let mut joint_frames: HashMap<String, Transform> = HashMap::new();
    for node in children(model, "joint") {
        let joint_name = required_attr(node, "name")?.to_string();
        let link_of = |tag: &str| -> Result<String, AssetError> {
            child(node, tag)
                .map(|n| text(n).to_string())
                .ok_or_else(|| AssetError::Parse(format!("joint {joint_name:?} has no <{tag}>")))
        };
        let (parent, child_link) = (link_of("parent")?, link_of("child")?);
        if parent == "world" {
            tracing::debug!(joint = %joint_name, "skipping joint attached to world");
            continue;
        }
        let kind = match required_attr(node, "type")? {
            "revolute" => JointType::Revolute,
            "continuous" => JointType::Continuous,
            "prismatic" => JointType::Prismatic,
            "fixed" => JointType::Fixed,
            other @ ("ball" | "universal" | "screw" | "gearbox" | "revolute2") => {
                return Err(AssetError::UnsupportedJoint { joint: joint_name, kind: other.into() })
            }
            other => {
                return Err(AssetError::Parse(format!("joint {joint_name:?}: unknown type {other:?}")))
            }
        };
        let child_pose = *model_poses.get(child_link.as_str()).ok_or_else(|| {
            AssetError::Structure(format!("joint {joint_name:?} references unknown link {child_link:?}"))
        })?;
        let frame = match raw_pose(node)? {
            None => child_pose,
            Some(RawPose { relative_to: None, pose }) => child_pose.compose(&pose),
            Some(RawPose { relative_to: Some(f), pose }) => frame_pose(&model_poses, f)?.compose(&pose),
        };
        if joint_frames.insert(child_link.clone(), frame).is_some() {
            return Err(AssetError::Structure(format!("multiple parents for link {child_link:?}")));
        }
        raw_joints.push((node, joint_name, kind, parent, child_link, frame));
    }

    let normalized = |link: &str| -> Option<Transform> {
        joint_frames.get(link).or_else(|| model_poses.get(link)).copied()
    };
    let mut joints = Vec::with_capacity(raw_joints.len());
    for (node, joint_name, kind, parent, child_link, frame) in raw_joints {
        let parent_frame = normalized(&parent).ok_or_else(|| {
            AssetError::Structure(format!("joint {joint_name:?} references unknown link {parent:?}"))
        })?;
        let (axis, limits) = read_axis(node, &joint_name, kind, &frame)?;
        joints.push(Joint {
            name: joint_name,
            kind,
            parent,
            child: child_link,
            origin: parent_frame.inverse().compose(&frame),
            axis,
            limits,
        });
    }
    KinematicTree::new(name, links, joints)
}

fn frame_pose(model_poses: &HashMap<&str, Transform>, frame: &str) -> Result<Transform, AssetError> {
    if frame == MODEL_FRAME {
        return Ok(Transform::IDENTITY);
    }
    model_poses
        .get(frame)
        .copied()
        .ok_or_else(|| AssetError::Parse(format!("unknown frame {frame:?} in relative_to")))
}

/// Resolves every link pose into the model frame, following `relative_to`
/// references between links.
fn resolve_link_poses<'a>(
    raw: &HashMap<&'a str, Option<RawPose<'a>>>,
) -> Result<HashMap<&'a str, Transform>, AssetError> {
    fn resolve<'a>(
        name: &'a str,
        raw: &HashMap<&'a str, Option<RawPose<'a>>>,
        done: &mut HashMap<&'a str, Transform>,
        depth: usize,
    ) -> Result<Transform, AssetError> {
        if let Some(p) = done.get(name) {
            return Ok(*p);
        }
        if depth > raw.len() {
            return Err(AssetError::Structure(format!("cycle in relative_to chain at {name:?}")));
        }
        let pose = match raw.get(name) {
            None if name == MODEL_FRAME => return Ok(Transform::IDENTITY),
            None => return Err(AssetError::Parse(format!("unknown frame {name:?} in relative_to"))),
            Some(None) => Transform::IDENTITY,
            Some(Some(RawPose { relative_to: None, pose })) => *pose,
            Some(Some(RawPose { relative_to: Some(f), pose })) => {
                resolve(f, raw, done, depth + 1)?.compose(pose)
            }
        };
        done.insert(name, pose);
        Ok(pose)
    }
    let mut done = HashMap::new();
    for name in raw.keys() {
        resolve(name, raw, &mut done, 0)?;
    }
    Ok(done)
}

fn read_axis(
    node: Node,
    joint_name: &str,
    kind: JointType,
    frame: &Transform,
) -> Result<(Vector3, Option<Limits>), AssetError> {
    let axis_node = child(node, "axis");
    let xyz_node = axis_node.and_then(|a| child(a, "xyz"));
    let mut axis = match xyz_node {
        Some(x) => vector(text(x), "axis xyz")?,
        None => Vector3::new(0.0, 0.0, 1.0),
    };
    let in_model_frame = xyz_node.and_then(|x| x.attribute("expressed_in")) == Some(MODEL_FRAME)
        || axis_node
            .and_then(|a| child(a, "use_parent_model_frame"))
            .is_some_and(|u| matches!(text(u), "true" | "1"));
    if let Some(f) = xyz_node.and_then(|x| x.attribute("expressed_in")) {
        if f != MODEL_FRAME && !f.is_empty() {
            return Err(AssetError::Parse(format!(
                "joint {joint_name:?}: axis expressed_in {f:?} is not supported"
            )));
        }
    }
    if in_model_frame {
        axis = frame.rotation.conjugate().rotate(&axis);
    }
    let limits = if kind.is_bounded() {
        let limit = axis_node.and_then(|a| child(a, "limit"));
        let bound = |tag: &str, default: f64| -> Result<f64, AssetError> {
            match limit.and_then(|l| child(l, tag)) {
                Some(n) => float(text(n), tag),
                None => Ok(default),
            }
        };
        Some(Limits { lower: bound("lower", -SDF_DEFAULT_LIMIT)?, upper: bound("upper", SDF_DEFAULT_LIMIT)? })
    } else {
        None
    };
    Ok((axis, limits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Quaternion;
    use std::f64::consts::FRAC_PI_2;

    fn sdf(body: &str) -> String {
        format!(r#"<?xml version="1.0"?><sdf version="1.7"><model name="m">{body}</model></sdf>"#)
    }

    #[test]
    fn empty_model_is_structure_error() {
        assert!(matches!(parse_sdf(&sdf("")), Err(AssetError::Structure(_))));
        assert!(matches!(parse_sdf("<sdf/>"), Err(AssetError::Parse(_))));
        assert!(matches!(parse_sdf("<robot/>"), Err(AssetError::Parse(_))));
    }

    #[test]
    fn link_poses_become_joint_origins() {
        let t = parse_sdf(&sdf(r#"
            <link name="base"/>
            <link name="arm"><pose>0 0 0.5 0 0 0</pose></link>
            <link name="tip"><pose>1 0 0.5 0 0 0</pose></link>
            <joint name="j1" type="revolute"><parent>base</parent><child>arm</child>
              <axis><xyz>0 0 1</xyz><limit><lower>-1</lower><upper>1</upper></limit></axis></joint>
            <joint name="j2" type="fixed"><parent>arm</parent><child>tip</child></joint>"#))
        .unwrap();
        assert!(t.joint("j1").unwrap().origin.approx_eq(&Transform::from_translation(0.0, 0.0, 0.5), 1e-12));
        assert!(t.joint("j2").unwrap().origin.approx_eq(&Transform::from_translation(1.0, 0.0, 0.0), 1e-12));
        assert_eq!(t.joint("j1").unwrap().limits, Some(Limits { lower: -1.0, upper: 1.0 }));
    }

    #[test]
    fn model_frame_axis_is_rotated_into_joint_frame() {
        // Child link yawed by 90 degrees; an axis along model x is joint -y.
        let t = parse_sdf(&sdf(r#"
            <link name="base"/>
            <link name="arm"><pose>0 0 0 0 0 1.5707963267948966</pose></link>
            <joint name="j" type="continuous"><parent>base</parent><child>arm</child>
              <axis><xyz expressed_in="__model__">1 0 0</xyz></axis></joint>"#))
        .unwrap();
        let j = t.joint("j").unwrap();
        assert!((j.axis - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
        let yaw = Quaternion::from_axis_angle(&Vector3::new(0.0, 0.0, 1.0), FRAC_PI_2);
        assert!(j.origin.rotation.same_rotation(&yaw, 1e-12));
    }

    #[test]
    fn joint_pose_offsets_child_frame() {
        let t = parse_sdf(&sdf(r#"
            <link name="base"/>
            <link name="arm"><pose>1 0 0 0 0 0</pose></link>
            <link name="tip"><pose>2 0 0 0 0 0</pose></link>
            <joint name="j1" type="continuous"><parent>base</parent><child>arm</child><pose>0 0 0.2 0 0 0</pose></joint>
            <joint name="j2" type="fixed"><parent>arm</parent><child>tip</child></joint>"#))
        .unwrap();
        let fk = t.forward_kinematics(&[("j1".to_string(), 0.0)].into()).unwrap();
        assert!((fk["arm"].translation - Vector3::new(1.0, 0.0, 0.2)).norm() < 1e-12);
        assert!((fk["tip"].translation - Vector3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn world_joints_skipped_and_default_limits() {
        let t = parse_sdf(&sdf(r#"
            <link name="base"/><link name="arm"/>
            <joint name="fix" type="fixed"><parent>world</parent><child>base</child></joint>
            <joint name="j" type="revolute"><parent>base</parent><child>arm</child></joint>"#))
        .unwrap();
        assert_eq!(t.joints().len(), 1);
        let l = t.joint("j").unwrap().limits.unwrap();
        assert_eq!((l.lower, l.upper), (-SDF_DEFAULT_LIMIT, SDF_DEFAULT_LIMIT));
        assert_eq!(t.joint("j").unwrap().axis, Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn unsupported_joint() {
        let r = parse_sdf(&sdf(r#"<link name="a"/><link name="b"/>
            <joint name="j" type="ball"><parent>a</parent><child>b</child></joint>"#));
        assert!(matches!(r, Err(AssetError::UnsupportedJoint { .. })));
    }

    #[test]
    fn relative_to_chain() {
        let t = parse_sdf(&sdf(r#"
            <link name="base"/>
            <link name="arm"><pose relative_to="base">0 0 1 0 0 0</pose></link>
            <link name="tip"><pose relative_to="arm">0 0 1 0 0 0</pose></link>
            <joint name="j1" type="fixed"><parent>base</parent><child>arm</child></joint>
            <joint name="j2" type="fixed"><parent>arm</parent><child>tip</child></joint>"#))
        .unwrap();
        let fk = t.forward_kinematics(&Default::default()).unwrap();
        assert!((fk["tip"].translation.z - 2.0).abs() < 1e-12);
    }
}
