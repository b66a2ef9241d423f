//! Minimal 3D math: vectors, unit quaternions, rigid transforms.
//!
//! Float math routes through `libm` so the crate stays `no_std`. Quaternions
//! are kept normalized by construction; `Iso3` composes rotation-then-offset
//! in the usual `parent * child` convention.

use core::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use libm::{acos, atan2, cos, fabs, floor, sin, sqrt, tan};

pub const PI: f64 = core::f64::consts::PI;
pub const TAU: f64 = core::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3 { x, y, z }
}

impl Vec3 {
    pub const ZERO: Vec3 = vec3(0.0, 0.0, 0.0);
    pub const X: Vec3 = vec3(1.0, 0.0, 0.0);
    pub const Y: Vec3 = vec3(0.0, 1.0, 0.0);
    pub const Z: Vec3 = vec3(0.0, 0.0, 1.0);

    pub fn dot(self, rhs: Vec3) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Vec3) -> Vec3 {
        vec3(
            self.y * rhs.z - self.z * rhs.y,
            self.z * rhs.x - self.x * rhs.z,
            self.x * rhs.y - self.y * rhs.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(self) -> f64 {
        sqrt(self.norm_squared())
    }

    /// `None` when the vector is too short to carry a direction.
    pub fn try_normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n < 1e-12 {
            None
        } else {
            Some(self / n)
        }
    }

    pub fn normalized(self) -> Vec3 {
        self.try_normalized().unwrap_or(Vec3::X)
    }

    pub fn lerp(self, rhs: Vec3, t: f64) -> Vec3 {
        self + (rhs - self) * t
    }

    pub fn distance(self, rhs: Vec3) -> f64 {
        (self - rhs).norm()
    }

    pub fn min_component_axis(self) -> usize {
        let a = [fabs(self.x), fabs(self.y), fabs(self.z)];
        let mut best = 0;
        if a[1] < a[best] {
            best = 1;
        }
        if a[2] < a[best] {
            best = 2;
        }
        best
    }

    pub fn component(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Vec3 {
        vec3(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        vec3(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        vec3(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        vec3(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        vec3(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        rhs * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, rhs: f64) -> Vec3 {
        vec3(self.x / rhs, self.y / rhs, self.z / rhs)
    }
}

impl Serialize for Vec3 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vec3 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        Ok(Vec3::from_array(a))
    }
}

/// Unit quaternion, scalar part first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Quat {
        Quat { w, x, y, z }.renormalized()
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Quat {
        let axis = match axis.try_normalized() {
            Some(a) => a,
            None => return Quat::IDENTITY,
        };
        let half = angle * 0.5;
        let s = sin(half);
        Quat {
            w: cos(half),
            x: axis.x * s,
            y: axis.y * s,
            z: axis.z * s,
        }
    }

    /// Exponential map from an axis-angle vector (axis * angle).
    pub fn from_rotvec(v: Vec3) -> Quat {
        let angle = v.norm();
        if angle < 1e-12 {
            Quat {
                w: 1.0,
                x: v.x * 0.5,
                y: v.y * 0.5,
                z: v.z * 0.5,
            }
            .renormalized()
        } else {
            Quat::from_axis_angle(v / angle, angle)
        }
    }

    /// Log map back to an axis-angle vector; the angle lands in [0, pi].
    pub fn to_rotvec(self) -> Vec3 {
        let q = if self.w < 0.0 { self.scaled(-1.0) } else { self };
        let v = vec3(q.x, q.y, q.z);
        let s = v.norm();
        if s < 1e-12 {
            v * 2.0
        } else {
            let angle = 2.0 * atan2(s, q.w);
            v * (angle / s)
        }
    }

    pub fn rot_x(angle: f64) -> Quat {
        Quat::from_axis_angle(Vec3::X, angle)
    }

    pub fn rot_y(angle: f64) -> Quat {
        Quat::from_axis_angle(Vec3::Y, angle)
    }

    pub fn rot_z(angle: f64) -> Quat {
        Quat::from_axis_angle(Vec3::Z, angle)
    }

    fn scaled(self, k: f64) -> Quat {
        Quat {
            w: self.w * k,
            x: self.x * k,
            y: self.y * k,
            z: self.z * k,
        }
    }

    pub fn renormalized(self) -> Quat {
        let n = sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z);
        if n < 1e-12 {
            Quat::IDENTITY
        } else {
            self.scaled(1.0 / n)
        }
    }

    pub fn conjugate(self) -> Quat {
        Quat {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn inverse(self) -> Quat {
        self.conjugate()
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        let u = vec3(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    pub fn dot(self, rhs: Quat) -> f64 {
        self.w * rhs.w + self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn slerp(self, rhs: Quat, t: f64) -> Quat {
        let mut b = rhs;
        let mut d = self.dot(rhs);
        if d < 0.0 {
            b = b.scaled(-1.0);
            d = -d;
        }
        if d > 0.9995 {
            return Quat {
                w: self.w + (b.w - self.w) * t,
                x: self.x + (b.x - self.x) * t,
                y: self.y + (b.y - self.y) * t,
                z: self.z + (b.z - self.z) * t,
            }
            .renormalized();
        }
        let theta = acos(d.clamp(-1.0, 1.0));
        let sn = sin(theta);
        let wa = sin((1.0 - t) * theta) / sn;
        let wb = sin(t * theta) / sn;
        Quat {
            w: self.w * wa + b.w * wb,
            x: self.x * wa + b.x * wb,
            y: self.y * wa + b.y * wb,
            z: self.z * wa + b.z * wb,
        }
        .renormalized()
    }

    /// Rotation angle in [0, pi] between two orientations.
    pub fn angle_to(self, rhs: Quat) -> f64 {
        (self.inverse() * rhs).to_rotvec().norm()
    }

    pub fn to_matrix(self) -> Mat3 {
        let Quat { w, x, y, z } = self;
        Mat3 {
            m: [
                [
                    1.0 - 2.0 * (y * y + z * z),
                    2.0 * (x * y - w * z),
                    2.0 * (x * z + w * y),
                ],
                [
                    2.0 * (x * y + w * z),
                    1.0 - 2.0 * (x * x + z * z),
                    2.0 * (y * z - w * x),
                ],
                [
                    2.0 * (x * z - w * y),
                    2.0 * (y * z + w * x),
                    1.0 - 2.0 * (x * x + y * y),
                ],
            ],
        }
    }

    pub fn from_matrix(m: &Mat3) -> Quat {
        let t = m.m[0][0] + m.m[1][1] + m.m[2][2];
        let q = if t > 0.0 {
            let s = sqrt(t + 1.0) * 2.0;
            Quat {
                w: 0.25 * s,
                x: (m.m[2][1] - m.m[1][2]) / s,
                y: (m.m[0][2] - m.m[2][0]) / s,
                z: (m.m[1][0] - m.m[0][1]) / s,
            }
        } else if m.m[0][0] > m.m[1][1] && m.m[0][0] > m.m[2][2] {
            let s = sqrt(1.0 + m.m[0][0] - m.m[1][1] - m.m[2][2]) * 2.0;
            Quat {
                w: (m.m[2][1] - m.m[1][2]) / s,
                x: 0.25 * s,
                y: (m.m[0][1] + m.m[1][0]) / s,
                z: (m.m[0][2] + m.m[2][0]) / s,
            }
        } else if m.m[1][1] > m.m[2][2] {
            let s = sqrt(1.0 + m.m[1][1] - m.m[0][0] - m.m[2][2]) * 2.0;
            Quat {
                w: (m.m[0][2] - m.m[2][0]) / s,
                x: (m.m[0][1] + m.m[1][0]) / s,
                y: 0.25 * s,
                z: (m.m[1][2] + m.m[2][1]) / s,
            }
        } else {
            let s = sqrt(1.0 + m.m[2][2] - m.m[0][0] - m.m[1][1]) * 2.0;
            Quat {
                w: (m.m[1][0] - m.m[0][1]) / s,
                x: (m.m[0][2] + m.m[2][0]) / s,
                y: (m.m[1][2] + m.m[2][1]) / s,
                z: 0.25 * s,
            }
        };
        q.renormalized()
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 4]) -> Quat {
        Quat {
            w: a[0],
            x: a[1],
            y: a[2],
            z: a[3],
        }
        .renormalized()
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, r: Quat) -> Quat {
        Quat {
            w: self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            x: self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            y: self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            z: self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        }
    }
}

impl Serialize for Quat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let a = <[f64; 4]>::deserialize(d)?;
        Ok(Quat::from_array(a))
    }
}

/// Orientation whose +z axis points along `forward`, with `up` as the roll
/// hint. Falls back to a fixed auxiliary axis when the hint is degenerate.
pub fn look_rotation(forward: Vec3, up: Vec3) -> Quat {
    let z = forward.normalized();
    let x = match up.cross(z).try_normalized() {
        Some(x) => x,
        None => {
            let aux = if fabs(z.x) < 0.9 { Vec3::X } else { Vec3::Y };
            aux.cross(z).normalized()
        }
    };
    let y = z.cross(x);
    Quat::from_matrix(&Mat3::from_cols(x, y, z))
}

/// Row-major 3x3 matrix; only what quaternion conversion needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub fn from_cols(x: Vec3, y: Vec3, z: Vec3) -> Mat3 {
        Mat3 {
            m: [[x.x, y.x, z.x], [x.y, y.y, z.y], [x.z, y.z, z.z]],
        }
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        vec3(
            self.m[0][0] * v.x + self.m[0][1] * v.y + self.m[0][2] * v.z,
            self.m[1][0] * v.x + self.m[1][1] * v.y + self.m[1][2] * v.z,
            self.m[2][0] * v.x + self.m[2][1] * v.y + self.m[2][2] * v.z,
        )
    }
}

/// Rigid transform: rotate, then translate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iso3 {
    pub rot: Quat,
    pub trans: Vec3,
}

impl Iso3 {
    pub const IDENTITY: Iso3 = Iso3 {
        rot: Quat::IDENTITY,
        trans: Vec3::ZERO,
    };

    pub fn new(trans: Vec3, rot: Quat) -> Iso3 {
        Iso3 { rot, trans }
    }

    pub fn from_translation(trans: Vec3) -> Iso3 {
        Iso3 {
            rot: Quat::IDENTITY,
            trans,
        }
    }

    pub fn from_rotation(rot: Quat) -> Iso3 {
        Iso3 {
            rot,
            trans: Vec3::ZERO,
        }
    }

    /// Planar pose on the floor: position (z forced by caller) plus yaw.
    pub fn planar(x: f64, y: f64, yaw: f64) -> Iso3 {
        Iso3 {
            rot: Quat::rot_z(yaw),
            trans: vec3(x, y, 0.0),
        }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.rot.rotate(p) + self.trans
    }

    pub fn transform_vector(&self, v: Vec3) -> Vec3 {
        self.rot.rotate(v)
    }

    pub fn inverse(&self) -> Iso3 {
        let inv = self.rot.inverse();
        Iso3 {
            rot: inv,
            trans: -inv.rotate(self.trans),
        }
    }

    /// Interpolates translation linearly and rotation by slerp.
    pub fn interpolate(&self, other: &Iso3, t: f64) -> Iso3 {
        Iso3 {
            rot: self.rot.slerp(other.rot, t),
            trans: self.trans.lerp(other.trans, t),
        }
    }
}

impl Mul for Iso3 {
    type Output = Iso3;
    fn mul(self, rhs: Iso3) -> Iso3 {
        Iso3 {
            rot: self.rot * rhs.rot,
            trans: self.trans + self.rot.rotate(rhs.trans),
        }
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a > PI {
        a -= TAU;
    } else if a < -PI {
        a += TAU;
    }
    a
}

pub fn deg_to_rad(d: f64) -> f64 {
    d * PI / 180.0
}

/// FNV-1a 64-bit hash; stable key for fixture lookup and content hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra as na;
    use proptest::prelude::*;

    fn na_quat(q: Quat) -> na::UnitQuaternion<f64> {
        na::UnitQuaternion::from_quaternion(na::Quaternion::new(q.w, q.x, q.y, q.z))
    }

    fn na_vec(v: Vec3) -> na::Vector3<f64> {
        na::Vector3::new(v.x, v.y, v.z)
    }

    #[test]
    fn fnv1a64_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn quat_rotate_matches_nalgebra() {
        let mut rng = crate::rng::SplitMix64::new(11);
        for _ in 0..1000 {
            let axis = vec3(
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            );
            let angle = rng.uniform(-PI, PI);
            let v = vec3(
                rng.uniform(-2.0, 2.0),
                rng.uniform(-2.0, 2.0),
                rng.uniform(-2.0, 2.0),
            );
            let q = Quat::from_axis_angle(axis, angle);
            let got = q.rotate(v);
            let want = na_quat(q).transform_vector(&na_vec(v));
            assert_relative_eq!(got.x, want.x, epsilon = 1e-12);
            assert_relative_eq!(got.y, want.y, epsilon = 1e-12);
            assert_relative_eq!(got.z, want.z, epsilon = 1e-12);
        }
    }

    #[test]
    fn quat_compose_matches_nalgebra() {
        let mut rng = crate::rng::SplitMix64::new(12);
        for _ in 0..500 {
            let a = Quat::from_rotvec(vec3(
                rng.uniform(-2.0, 2.0),
                rng.uniform(-2.0, 2.0),
                rng.uniform(-2.0, 2.0),
            ));
            let b = Quat::from_rotvec(vec3(
                rng.uniform(-2.0, 2.0),
                rng.uniform(-2.0, 2.0),
                rng.uniform(-2.0, 2.0),
            ));
            let got = a * b;
            let want = na_quat(a) * na_quat(b);
            let dot = got.w * want.w + got.x * want.i + got.y * want.j + got.z * want.k;
            assert!(fabs(fabs(dot) - 1.0) < 1e-12);
        }
    }

    #[test]
    fn iso_compose_and_inverse_match_nalgebra() {
        let mut rng = crate::rng::SplitMix64::new(13);
        for _ in 0..500 {
            let a = Iso3::new(
                vec3(
                    rng.uniform(-3.0, 3.0),
                    rng.uniform(-3.0, 3.0),
                    rng.uniform(-3.0, 3.0),
                ),
                Quat::from_rotvec(vec3(
                    rng.uniform(-2.0, 2.0),
                    rng.uniform(-2.0, 2.0),
                    rng.uniform(-2.0, 2.0),
                )),
            );
            let b = Iso3::new(
                vec3(
                    rng.uniform(-3.0, 3.0),
                    rng.uniform(-3.0, 3.0),
                    rng.uniform(-3.0, 3.0),
                ),
                Quat::from_rotvec(vec3(
                    rng.uniform(-2.0, 2.0),
                    rng.uniform(-2.0, 2.0),
                    rng.uniform(-2.0, 2.0),
                )),
            );
            let p = vec3(
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            );
            let na_a = na::Isometry3::from_parts(na::Translation3::from(na_vec(a.trans)), na_quat(a.rot));
            let na_b = na::Isometry3::from_parts(na::Translation3::from(na_vec(b.trans)), na_quat(b.rot));

            let got = (a * b).transform_point(p);
            let want = (na_a * na_b).transform_point(&na::Point3::new(p.x, p.y, p.z));
            assert_relative_eq!(got.x, want.x, epsilon = 1e-10);
            assert_relative_eq!(got.y, want.y, epsilon = 1e-10);
            assert_relative_eq!(got.z, want.z, epsilon = 1e-10);

            let round = a.inverse().transform_point(a.transform_point(p));
            assert!(round.distance(p) < 1e-10);
        }
    }

    #[test]
    fn look_rotation_aligns_forward_and_up() {
        let q = look_rotation(vec3(1.0, 2.0, -0.5), Vec3::Z);
        let fwd = q.rotate(Vec3::Z);
        assert!(fwd.distance(vec3(1.0, 2.0, -0.5).normalized()) < 1e-12);
        let y = q.rotate(Vec3::Y);
        assert!(y.dot(Vec3::Z) > 0.0);

        let straight_down = look_rotation(-Vec3::Z, Vec3::Z);
        let fwd = straight_down.rotate(Vec3::Z);
        assert!(fwd.distance(-Vec3::Z) < 1e-12);
    }

    proptest! {
        #[test]
        fn rotvec_roundtrip(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
            let v = vec3(x, y, z);
            prop_assume!(v.norm() < PI);
            let q = Quat::from_rotvec(v);
            let back = q.to_rotvec();
            prop_assert!(back.distance(v) < 1e-9);
        }

        #[test]
        fn wrap_angle_lands_in_range(a in -100.0f64..100.0) {
            let w = wrap_angle(a);
            prop_assert!((-PI..=PI).contains(&w));
            prop_assert!(fabs(sin(w) - sin(a)) < 1e-9);
            prop_assert!(fabs(cos(w) - cos(a)) < 1e-9);
        }
    }
}
