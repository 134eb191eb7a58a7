//! Small helpers shared by the URDF and SDF readers.

use roxmltree::Node;

use super::AssetError;
use crate::geometry::{Quaternion, Transform, Vector3};

pub(super) fn parse_document(text: &str) -> Result<roxmltree::Document<'_>, AssetError> {
    roxmltree::Document::parse(text).map_err(|e| AssetError::Parse(e.to_string()))
}

pub(super) fn child<'a, 'i>(node: Node<'a, 'i>, tag: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(tag))
}

pub(super) fn children<'a, 'i>(
    node: Node<'a, 'i>,
    tag: &'static str,
) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(move |c| c.has_tag_name(tag))
}

pub(super) fn required_attr<'a>(node: Node<'a, '_>, attr: &str) -> Result<&'a str, AssetError> {
    node.attribute(attr).ok_or_else(|| {
        AssetError::Parse(format!(
            "<{}> at byte {} is missing attribute {attr:?}",
            node.tag_name().name(),
            node.range().start
        ))
    })
}

pub(super) fn floats<const N: usize>(text: &str, what: &str) -> Result<[f64; N], AssetError> {
    let bad = || AssetError::Parse(format!("{what}: expected {N} numbers, got {text:?}"));
    let mut out = [0.0f64; N];
    let mut parts = text.split_whitespace();
    for slot in &mut out {
        *slot = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if !slot.is_finite() {
            return Err(bad());
        }
    }
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(out)
}

pub(super) fn float(text: &str, what: &str) -> Result<f64, AssetError> {
    floats::<1>(text, what).map(|[v]| v)
}

pub(super) fn vector(text: &str, what: &str) -> Result<Vector3, AssetError> {
    floats::<3>(text, what).map(|[x, y, z]| Vector3::new(x, y, z))
}

pub(super) fn pose(xyz: [f64; 3], rpy: [f64; 3]) -> Transform {
    Transform::new(Vector3::new(xyz[0], xyz[1], xyz[2]), Quaternion::from_rpy(rpy[0], rpy[1], rpy[2]))
}

pub(super) fn text<'a>(node: Node<'a, '_>) -> &'a str {
    node.text().unwrap_or("").trim()
}
