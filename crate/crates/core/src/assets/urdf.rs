//! URDF reader covering links, the four supported joint types, origins,
//! axes and limits. Everything else in the file is skipped.

use std::collections::BTreeSet;

use super::kinematics::{Joint, JointType, KinematicTree, Limits, Link};
use super::xml::{child, children, floats, parse_document, pose, required_attr, vector};
use super::AssetError;
use crate::geometry::{Transform, Vector3};

const IGNORED_TOP_LEVEL: [&str; 3] = ["transmission", "material", "gazebo"];

/// Parses arbitrary bytes; non-UTF-8 input is a [`AssetError::Parse`].
pub fn parse_urdf_bytes(bytes: &[u8]) -> Result<KinematicTree, AssetError> {
    let text = std::str::from_utf8(bytes).map_err(|e| AssetError::Parse(e.to_string()))?;
    parse_urdf(text)
}

pub fn parse_urdf(text: &str) -> Result<KinematicTree, AssetError> {
    let doc = parse_document(text)?;
    let robot = doc.root_element();
    if !robot.has_tag_name("robot") {
        return Err(AssetError::Parse(format!(
            "root element must be <robot>, found <{}>",
            robot.tag_name().name()
        )));
    }
    let name = robot.attribute("name").unwrap_or_default();
    let mut skipped = BTreeSet::new();

    let mut links = Vec::new();
    for node in children(robot, "link") {
        if child(node, "collision").is_some() {
            skipped.insert("collision");
        }
        let visual = child(node, "visual")
            .and_then(|v| child(v, "geometry"))
            .and_then(|g| child(g, "mesh"))
            .and_then(|m| m.attribute("filename"))
            .map(str::to_string);
        links.push(Link { name: required_attr(node, "name")?.to_string(), visual });
    }

    let mut joints = Vec::new();
    for node in children(robot, "joint") {
        if child(node, "mimic").is_some() {
            skipped.insert("mimic");
        }
        joints.push(read_joint(node)?);
    }

    for node in robot.children().filter(|n| n.is_element()) {
        if let Some(tag) = IGNORED_TOP_LEVEL.iter().find(|t| node.has_tag_name(**t)) {
            skipped.insert(tag);
        }
    }
    if !skipped.is_empty() {
        tracing::warn!(robot = name, ignored = ?skipped, "URDF elements ignored");
    }
    KinematicTree::new(name, links, joints)
}

fn read_joint(node: roxmltree::Node) -> Result<Joint, AssetError> {
    let name = required_attr(node, "name")?.to_string();
    let kind = match required_attr(node, "type")? {
        "revolute" => JointType::Revolute,
        "continuous" => JointType::Continuous,
        "prismatic" => JointType::Prismatic,
        "fixed" => JointType::Fixed,
        other @ ("floating" | "planar") => {
            return Err(AssetError::UnsupportedJoint { joint: name, kind: other.to_string() })
        }
        other => return Err(AssetError::Parse(format!("joint {name:?}: unknown type {other:?}"))),
    };
    let link_of = |tag: &str| -> Result<String, AssetError> {
        let n = child(node, tag)
            .ok_or_else(|| AssetError::Parse(format!("joint {name:?} has no <{tag}>")))?;
        Ok(required_attr(n, "link")?.to_string())
    };
    let (parent, child_link) = (link_of("parent")?, link_of("child")?);

    let origin = match child(node, "origin") {
        Some(o) => {
            let xyz = o.attribute("xyz").map_or(Ok([0.0; 3]), |t| floats(t, "origin xyz"))?;
            let rpy = o.attribute("rpy").map_or(Ok([0.0; 3]), |t| floats(t, "origin rpy"))?;
            pose(xyz, rpy)
        }
        None => Transform::IDENTITY,
    };
    let axis = match child(node, "axis") {
        Some(a) => vector(required_attr(a, "xyz")?, "axis xyz")?,
        None => Vector3::new(1.0, 0.0, 0.0),
    };
    let limits = if kind.is_bounded() {
        let l = child(node, "limit")
            .ok_or_else(|| AssetError::Parse(format!("joint {name:?} needs a <limit>")))?;
        let bound = |attr| l.attribute(attr).map_or(Ok(0.0), |t| super::xml::float(t, attr));
        Some(Limits { lower: bound("lower")?, upper: bound("upper")? })
    } else {
        None
    };
    Ok(Joint { name, kind, parent, child: child_link, origin, axis, limits })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LINK: &str = r#"<?xml version="1.0"?>
<robot name="two_link">
  <link name="base_link"/>
  <link name="link1">
    <visual><geometry><mesh filename="meshes/link1.stl"/></geometry></visual>
  </link>
  <joint name="joint1" type="revolute">
    <parent link="base_link"/>
    <child link="link1"/>
    <origin xyz="0 0 0.1" rpy="0 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="-3.141592653589793" upper="3.141592653589793" effort="1" velocity="1"/>
  </joint>
</robot>"#;

    #[test]
    fn minimal_two_link() {
        let t = parse_urdf(TWO_LINK).unwrap();
        assert_eq!(t.name(), "two_link");
        assert_eq!(t.root(), "base_link");
        assert_eq!(t.moving_joints().count(), 1);
        let j = t.joint("joint1").unwrap();
        assert_eq!(j.kind, JointType::Revolute);
        assert_eq!(j.axis, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(j.limits.unwrap().upper, std::f64::consts::PI);
        assert_eq!(t.links()[1].visual.as_deref(), Some("meshes/link1.stl"));
    }

    #[test]
    fn defaults_for_origin_and_axis() {
        let t = parse_urdf(
            r#"<robot name="d"><link name="a"/><link name="b"/>
               <joint name="j" type="continuous"><parent link="a"/><child link="b"/></joint></robot>"#,
        )
        .unwrap();
        let j = t.joint("j").unwrap();
        assert_eq!(j.origin, Transform::IDENTITY);
        assert_eq!(j.axis, Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(j.limits, None);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_urdf("<robot"), Err(AssetError::Parse(_))));
        assert!(matches!(parse_urdf("<model/>"), Err(AssetError::Parse(_))));
        assert!(matches!(parse_urdf_bytes(&[0xff, 0xfe]), Err(AssetError::Parse(_))));
        let floating = r#"<robot name="f"><link name="a"/><link name="b"/>
            <joint name="j" type="floating"><parent link="a"/><child link="b"/></joint></robot>"#;
        assert!(matches!(parse_urdf(floating), Err(AssetError::UnsupportedJoint { .. })));
        let no_limit = r#"<robot name="f"><link name="a"/><link name="b"/>
            <joint name="j" type="revolute"><parent link="a"/><child link="b"/></joint></robot>"#;
        assert!(matches!(parse_urdf(no_limit), Err(AssetError::Parse(_))));
        let bad_axis = r#"<robot name="f"><link name="a"/><link name="b"/>
            <joint name="j" type="fixed"><parent link="a"/><child link="b"/><axis xyz="1 0"/></joint></robot>"#;
        assert!(matches!(parse_urdf(bad_axis), Err(AssetError::Parse(_))));
    }

    #[test]
    fn link_with_two_parents() {
        let text = r#"<robot name="x"><link name="r"/><link name="s"/><link name="a"/>
            <joint name="j1" type="fixed"><parent link="r"/><child link="a"/></joint>
            <joint name="j2" type="fixed"><parent link="s"/><child link="a"/></joint></robot>"#;
        match parse_urdf(text) {
            Err(AssetError::Structure(m)) => assert!(m.contains("multiple parents")),
            other => panic!("{other:?}"),
        }
    }
}
