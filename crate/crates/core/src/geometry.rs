//! Rigid-body primitives shared by the message types, the anchor registry and
//! the kinematics code.
//!
//! Rotations are unit quaternions in `(x, y, z, w)` order. A [`Transform`]
//! maps points from its child frame into its parent frame, and
//! `a.compose(&b)` applies `b` first and then `a`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::message::canonical::canon_f64;

/// Maximum tolerated deviation of a quaternion norm from one.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vector3 {
    #[serde(serialize_with = "canon_f64")]
    pub x: f64,
    #[serde(serialize_with = "canon_f64")]
    pub y: f64,
    #[serde(serialize_with = "canon_f64")]
    pub z: f64,
}

impl Vector3 {
    pub const ZERO: Vector3 = Vector3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Vector3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Vector3) -> Vector3 {
        Vector3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Vector3 {
        Vector3::new(self.x * s, self.y * s, self.z * s)
    }

    /// Returns the unit vector in the same direction, or `None` for a zero
    /// or non-finite vector.
    pub fn normalized(&self) -> Option<Vector3> {
        let n = self.norm();
        if n.is_finite() && n > 0.0 {
            Some(self.scale(1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(&self, other: &Vector3, s: f64) -> Vector3 {
        *self + (*other - *self).scale(s)
    }

    pub fn distance(&self, other: &Vector3) -> f64 {
        (*other - *self).norm()
    }
}

impl Add for Vector3 {
    type Output = Vector3;
    fn add(self, rhs: Vector3) -> Vector3 {
        Vector3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vector3 {
    type Output = Vector3;
    fn sub(self, rhs: Vector3) -> Vector3 {
        Vector3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vector3 {
    type Output = Vector3;
    fn neg(self) -> Vector3 {
        Vector3::new(-self.x, -self.y, -self.z)
    }
}

/// A rotation quaternion. Fields are public so that decoded payloads can be
/// inspected before validation; use [`Quaternion::normalized`] to build one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quaternion {
    #[serde(serialize_with = "canon_f64")]
    pub x: f64,
    #[serde(serialize_with = "canon_f64")]
    pub y: f64,
    #[serde(serialize_with = "canon_f64")]
    pub z: f64,
    #[serde(serialize_with = "canon_f64")]
    pub w: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { x: 0.0, y: 0.0, z: 0.0, w: 1.0 };

    /// Builds a unit quaternion from raw components. Returns `None` when the
    /// components are zero or not finite.
    pub fn normalized(x: f64, y: f64, z: f64, w: f64) -> Option<Quaternion> {
        let n = (x * x + y * y + z * z + w * w).sqrt();
        if n.is_finite() && n > 0.0 {
            Some(Quaternion { x: x / n, y: y / n, z: z / n, w: w / n })
        } else {
            None
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        let n = self.norm();
        n.is_finite() && (n - 1.0).abs() <= QUATERNION_NORM_TOLERANCE
    }

    /// Unit-norm copy; a degenerate quaternion collapses to identity.
    pub fn renormalize(&self) -> Quaternion {
        Quaternion::normalized(self.x, self.y, self.z, self.w).unwrap_or(Quaternion::IDENTITY)
    }

    /// Rotation of `angle` radians about `axis`. The axis need not be unit
    /// length; a zero axis yields the identity.
    pub fn from_axis_angle(axis: &Vector3, angle: f64) -> Quaternion {
        match axis.normalized() {
            Some(u) => {
                let (s, c) = (angle * 0.5).sin_cos();
                Quaternion { x: u.x * s, y: u.y * s, z: u.z * s, w: c }
            }
            None => Quaternion::IDENTITY,
        }
    }

    /// Fixed-axis roll/pitch/yaw, i.e. `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Quaternion {
        let (sr, cr) = (roll * 0.5).sin_cos();
        let (sp, cp) = (pitch * 0.5).sin_cos();
        let (sy, cy) = (yaw * 0.5).sin_cos();
        Quaternion {
            x: sr * cp * cy - cr * sp * sy,
            y: cr * sp * cy + sr * cp * sy,
            z: cr * cp * sy - sr * sp * cy,
            w: cr * cp * cy + sr * sp * sy,
        }
    }

    pub fn conjugate(&self) -> Quaternion {
        Quaternion { x: -self.x, y: -self.y, z: -self.z, w: self.w }
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z + self.w * other.w
    }

    pub fn rotate(&self, v: &Vector3) -> Vector3 {
        let u = Vector3::new(self.x, self.y, self.z);
        let t = u.cross(v).scale(2.0);
        *v + t.scale(self.w) + u.cross(&t)
    }

    /// True when both quaternions describe the same rotation, treating `q`
    /// and `-q` as equal.
    pub fn same_rotation(&self, other: &Quaternion, tol: f64) -> bool {
        1.0 - self.dot(other).abs() <= tol
    }

    /// Shortest-path spherical interpolation.
    pub fn slerp(&self, other: &Quaternion, s: f64) -> Quaternion {
        let mut d = self.dot(other);
        let mut end = *other;
        if d < 0.0 {
            d = -d;
            end = Quaternion { x: -end.x, y: -end.y, z: -end.z, w: -end.w };
        }
        if d > 0.9995 {
            return Quaternion::normalized(
                self.x + (end.x - self.x) * s,
                self.y + (end.y - self.y) * s,
                self.z + (end.z - self.z) * s,
                self.w + (end.w - self.w) * s,
            )
            .unwrap_or(*self);
        }
        let theta = d.clamp(-1.0, 1.0).acos();
        let sin_theta = theta.sin();
        let a = ((1.0 - s) * theta).sin() / sin_theta;
        let b = (s * theta).sin() / sin_theta;
        Quaternion {
            x: a * self.x + b * end.x,
            y: a * self.y + b * end.y,
            z: a * self.z + b * end.z,
            w: a * self.w + b * end.w,
        }
        .renormalize()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    /// Hamilton product.
    fn mul(self, r: Quaternion) -> Quaternion {
        Quaternion {
            w: self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            x: self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            y: self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            z: self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        }
    }
}

/// A proper rigid transform (rotation followed by translation).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transform {
    pub translation: Vector3,
    pub rotation: Quaternion,
}

impl Transform {
    pub const IDENTITY: Transform =
        Transform { translation: Vector3::ZERO, rotation: Quaternion::IDENTITY };

    pub fn new(translation: Vector3, rotation: Quaternion) -> Self {
        Self { translation, rotation: rotation.renormalize() }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self { translation: Vector3::new(x, y, z), rotation: Quaternion::IDENTITY }
    }

    pub fn from_rotation(rotation: Quaternion) -> Self {
        Self { translation: Vector3::ZERO, rotation: rotation.renormalize() }
    }

    /// `self ∘ other`: apply `other`, then `self`.
    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            translation: self.translation + self.rotation.rotate(&other.translation),
            rotation: (self.rotation * other.rotation).renormalize(),
        }
    }

    pub fn inverse(&self) -> Transform {
        let inv = self.rotation.conjugate().renormalize();
        Transform { translation: -inv.rotate(&self.translation), rotation: inv }
    }

    pub fn apply(&self, point: &Vector3) -> Vector3 {
        self.translation + self.rotation.rotate(point)
    }

    pub fn is_valid(&self) -> bool {
        self.translation.is_finite() && self.rotation.is_unit()
    }

    /// Compares translations component-wise within `tol` and rotations up to
    /// quaternion sign.
    pub fn approx_eq(&self, other: &Transform, tol: f64) -> bool {
        let d = self.translation - other.translation;
        d.x.abs() <= tol
            && d.y.abs() <= tol
            && d.z.abs() <= tol
            && self.rotation.same_rotation(&other.rotation, tol)
    }

    /// Row-major homogeneous matrix.
    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let q = &self.rotation;
        let (x, y, z, w) = (q.x, q.y, q.z, q.w);
        let t = &self.translation;
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w), t.x],
            [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w), t.y],
            [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y), t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }
}

impl Mul for Transform {
    type Output = Transform;
    fn mul(self, rhs: Transform) -> Transform {
        self.compose(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn rpy_matches_axis_products() {
        let q = Quaternion::from_rpy(0.3, -0.2, 1.1);
        let expected = Quaternion::from_axis_angle(&Vector3::new(0.0, 0.0, 1.0), 1.1)
            * Quaternion::from_axis_angle(&Vector3::new(0.0, 1.0, 0.0), -0.2)
            * Quaternion::from_axis_angle(&Vector3::new(1.0, 0.0, 0.0), 0.3);
        assert!(q.same_rotation(&expected, 1e-12));
    }

    #[test]
    fn quarter_turn_about_z_maps_x_to_y() {
        let q = Quaternion::from_axis_angle(&Vector3::new(0.0, 0.0, 1.0), FRAC_PI_2);
        let v = q.rotate(&Vector3::new(1.0, 0.0, 0.0));
        assert!((v.x).abs() < 1e-12 && (v.y - 1.0).abs() < 1e-12 && v.z.abs() < 1e-12);
    }

    #[test]
    fn pure_translation_inverse_negates() {
        let t = Transform::from_translation(1.0, 2.0, 3.0).inverse();
        assert_eq!(t.translation, Vector3::new(-1.0, -2.0, -3.0));
        assert_eq!(t.rotation, Quaternion::IDENTITY);
    }

    #[test]
    fn identity_inverse_is_identity() {
        assert!(Transform::IDENTITY.inverse().approx_eq(&Transform::IDENTITY, 0.0));
    }

    #[test]
    fn double_cover_is_same_rotation() {
        let q = Quaternion::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.7);
        let neg = Quaternion { x: -q.x, y: -q.y, z: -q.z, w: -q.w };
        assert!(q.same_rotation(&neg, 1e-12));
    }

    #[test]
    fn slerp_endpoints_and_midpoint() {
        let a = Quaternion::IDENTITY;
        let b = Quaternion::from_axis_angle(&Vector3::new(0.0, 0.0, 1.0), PI / 2.0);
        assert!(a.slerp(&b, 0.0).same_rotation(&a, 1e-12));
        assert!(a.slerp(&b, 1.0).same_rotation(&b, 1e-12));
        let mid = Quaternion::from_axis_angle(&Vector3::new(0.0, 0.0, 1.0), PI / 4.0);
        assert!(a.slerp(&b, 0.5).same_rotation(&mid, 1e-12));
    }

    #[test]
    fn degenerate_quaternion_rejected() {
        assert!(Quaternion::normalized(0.0, 0.0, 0.0, 0.0).is_none());
        assert!(Quaternion::normalized(f64::NAN, 0.0, 0.0, 1.0).is_none());
    }
}
