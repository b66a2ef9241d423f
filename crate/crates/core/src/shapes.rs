//! Collision and ray-cast primitives: capsules, oriented boxes, triangles.
//!
//! Distance conventions: nonnegative values are separation gaps, negative
//! values are penetration depths. Capsule and box queries are analytic except
//! segment-vs-box, which minimizes the convex signed distance along the
//! segment by ternary search (the minimand is convex, so this is exact to the
//! iteration limit).

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{fabs, sqrt, vec3, Iso3, Vec3};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Capsule {
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: Vec3, b: Vec3, radius: f64) -> Capsule {
        Capsule { a, b, radius }
    }

    pub fn transformed(&self, iso: &Iso3) -> Capsule {
        Capsule {
            a: iso.transform_point(self.a),
            b: iso.transform_point(self.b),
            radius: self.radius,
        }
    }

    pub fn aabb(&self) -> Aabb {
        let r = vec3(self.radius, self.radius, self.radius);
        Aabb {
            min: vec3(
                self.a.x.min(self.b.x),
                self.a.y.min(self.b.y),
                self.a.z.min(self.b.z),
            ) - r,
            max: vec3(
                self.a.x.max(self.b.x),
                self.a.y.max(self.b.y),
                self.a.z.max(self.b.z),
            ) + r,
        }
    }
}

/// Oriented box: world pose of its center plus half extents.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Obb {
    pub pose: Iso3,
    pub half: Vec3,
}

impl Obb {
    pub fn new(pose: Iso3, half: Vec3) -> Obb {
        Obb { pose, half }
    }

    /// Corner `i` in world space; bits 0/1/2 of `i` select +x/+y/+z.
    /// This enumeration order is the tie-break order for anchor selection.
    pub fn corner(&self, i: usize) -> Vec3 {
        let sx = if i & 1 != 0 { self.half.x } else { -self.half.x };
        let sy = if i & 2 != 0 { self.half.y } else { -self.half.y };
        let sz = if i & 4 != 0 { self.half.z } else { -self.half.z };
        self.pose.transform_point(vec3(sx, sy, sz))
    }

    pub fn corners(&self) -> [Vec3; 8] {
        core::array::from_fn(|i| self.corner(i))
    }

    /// The 12 edges as world-space segments.
    pub fn edges(&self) -> [(Vec3, Vec3); 12] {
        let c = self.corners();
        [
            (c[0], c[1]),
            (c[2], c[3]),
            (c[4], c[5]),
            (c[6], c[7]),
            (c[0], c[2]),
            (c[1], c[3]),
            (c[4], c[6]),
            (c[5], c[7]),
            (c[0], c[4]),
            (c[1], c[5]),
            (c[2], c[6]),
            (c[3], c[7]),
        ]
    }

    pub fn aabb(&self) -> Aabb {
        let mut bb = Aabb::empty();
        for c in self.corners() {
            bb.grow(c);
        }
        bb
    }

    /// Signed distance from a point: positive outside, negative inside.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        let l = self.pose.inverse().transform_point(p);
        let d = vec3(
            fabs(l.x) - self.half.x,
            fabs(l.y) - self.half.y,
            fabs(l.z) - self.half.z,
        );
        let outside = vec3(d.x.max(0.0), d.y.max(0.0), d.z.max(0.0));
        let inside = d.x.max(d.y).max(d.z).min(0.0);
        outside.norm() + inside
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.signed_distance(p) <= 0.0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Aabb {
        Aabb {
            min: vec3(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: vec3(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn grow(&mut self, p: Vec3) {
        self.min = vec3(self.min.x.min(p.x), self.min.y.min(p.y), self.min.z.min(p.z));
        self.max = vec3(self.max.x.max(p.x), self.max.y.max(p.y), self.max.z.max(p.z));
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: vec3(
                self.min.x.min(other.min.x),
                self.min.y.min(other.min.y),
                self.min.z.min(other.min.z),
            ),
            max: vec3(
                self.max.x.max(other.max.x),
                self.max.y.max(other.max.y),
                self.max.z.max(other.max.z),
            ),
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.max - self.min;
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && self.max.x >= other.min.x
            && self.min.y <= other.max.y
            && self.max.y >= other.min.y
            && self.min.z <= other.max.z
            && self.max.z >= other.min.z
    }

    /// Slab test; returns the entry parameter if the ray hits within
    /// [t_min, t_max].
    pub fn ray_hit(&self, origin: Vec3, dir_inv: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for axis in 0..3 {
            let (o, di, lo, hi) = match axis {
                0 => (origin.x, dir_inv.x, self.min.x, self.max.x),
                1 => (origin.y, dir_inv.y, self.min.y, self.max.y),
                _ => (origin.z, dir_inv.z, self.min.z, self.max.z),
            };
            let mut ta = (lo - o) * di;
            let mut tb = (hi - o) * di;
            if ta > tb {
                core::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

/// Closest point on segment `ab` to `p`, with its parameter in [0, 1].
pub fn closest_point_on_segment(p: Vec3, a: Vec3, b: Vec3) -> (Vec3, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 < 1e-18 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

/// Closest points between segments `p1q1` and `p2q2` (Ericson 5.1.9).
pub fn segment_segment_closest(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> (Vec3, Vec3) {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);

    let (s, t);
    if a < 1e-18 && e < 1e-18 {
        return (p1, p2);
    }
    if a < 1e-18 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e < 1e-18 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s_ = if denom > 1e-18 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let t_raw = b * s_ + f;
            let t_;
            if t_raw < 0.0 {
                t_ = 0.0;
                s_ = (-c / a).clamp(0.0, 1.0);
            } else if t_raw > e {
                t_ = 1.0;
                s_ = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                t_ = t_raw / e;
            }
            s = s_;
            t = t_;
        }
    }
    (p1 + d1 * s, p2 + d2 * t)
}

pub fn segment_segment_distance(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
    let (c1, c2) = segment_segment_closest(p1, q1, p2, q2);
    c1.distance(c2)
}

pub fn capsule_capsule_distance(a: &Capsule, b: &Capsule) -> f64 {
    segment_segment_distance(a.a, a.b, b.a, b.b) - a.radius - b.radius
}

/// Minimum signed box distance along a segment via ternary search; the
/// signed distance of a convex set is convex along a line, so the search
/// converges to the global minimum.
pub fn segment_obb_signed_distance(a: Vec3, b: Vec3, obb: &Obb) -> f64 {
    let f = |t: f64| obb.signed_distance(a.lerp(b, t));
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..80 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f((lo + hi) * 0.5).min(f(0.0)).min(f(1.0))
}

pub fn capsule_obb_distance(c: &Capsule, obb: &Obb) -> f64 {
    segment_obb_signed_distance(c.a, c.b, obb) - c.radius
}

/// Separating-axis overlap test for two oriented boxes.
pub fn obb_obb_overlap(a: &Obb, b: &Obb) -> bool {
    let ca = a.pose.trans;
    let cb = b.pose.trans;
    let axes_a: [Vec3; 3] = [
        a.pose.rot.rotate(Vec3::X),
        a.pose.rot.rotate(Vec3::Y),
        a.pose.rot.rotate(Vec3::Z),
    ];
    let axes_b: [Vec3; 3] = [
        b.pose.rot.rotate(Vec3::X),
        b.pose.rot.rotate(Vec3::Y),
        b.pose.rot.rotate(Vec3::Z),
    ];
    let ha = a.half.to_array();
    let hb = b.half.to_array();
    let d = cb - ca;

    let mut axes: Vec<Vec3> = Vec::with_capacity(15);
    axes.extend_from_slice(&axes_a);
    axes.extend_from_slice(&axes_b);
    for ax in &axes_a {
        for bx in &axes_b {
            let c = ax.cross(*bx);
            if c.norm_squared() > 1e-12 {
                axes.push(c);
            }
        }
    }
    for axis in axes {
        let ra: f64 = (0..3).map(|i| ha[i] * fabs(axes_a[i].dot(axis))).sum();
        let rb: f64 = (0..3).map(|i| hb[i] * fabs(axes_b[i].dot(axis))).sum();
        if fabs(d.dot(axis)) > ra + rb {
            return false;
        }
    }
    true
}

/// Distance between two boxes: when overlapping, the negated SAT
/// minimum-translation depth (exact for boxes); otherwise the exact
/// separation from vertex and edge candidates.
pub fn obb_obb_distance(a: &Obb, b: &Obb) -> f64 {
    if obb_obb_overlap(a, b) {
        let ca = a.pose.trans;
        let cb = b.pose.trans;
        let axes_a: [Vec3; 3] = [
            a.pose.rot.rotate(Vec3::X),
            a.pose.rot.rotate(Vec3::Y),
            a.pose.rot.rotate(Vec3::Z),
        ];
        let axes_b: [Vec3; 3] = [
            b.pose.rot.rotate(Vec3::X),
            b.pose.rot.rotate(Vec3::Y),
            b.pose.rot.rotate(Vec3::Z),
        ];
        let ha = a.half.to_array();
        let hb = b.half.to_array();
        let d = cb - ca;
        let mut axes: Vec<Vec3> = Vec::with_capacity(15);
        axes.extend_from_slice(&axes_a);
        axes.extend_from_slice(&axes_b);
        for ax in &axes_a {
            for bx in &axes_b {
                if let Some(c) = ax.cross(*bx).try_normalized() {
                    axes.push(c);
                }
            }
        }
        let mut depth = f64::INFINITY;
        for axis in axes {
            let ra: f64 = (0..3).map(|i| ha[i] * fabs(axes_a[i].dot(axis))).sum();
            let rb: f64 = (0..3).map(|i| hb[i] * fabs(axes_b[i].dot(axis))).sum();
            depth = depth.min(ra + rb - fabs(d.dot(axis)));
        }
        return -depth.max(0.0);
    }
    let mut best = f64::INFINITY;
    for c in a.corners() {
        best = best.min(b.signed_distance(c));
    }
    for c in b.corners() {
        best = best.min(a.signed_distance(c));
    }
    for (ea0, ea1) in a.edges() {
        for (eb0, eb1) in b.edges() {
            best = best.min(segment_segment_distance(ea0, ea1, eb0, eb1));
        }
    }
    best
}

/// Closest point on triangle `abc` to `p` (Ericson 5.1.5).
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    p.distance(closest_point_on_triangle(p, a, b, c))
}

/// Minimum distance between segment `pq` and triangle `abc`.
pub fn segment_triangle_distance(p: Vec3, q: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    // A segment crossing the triangle's interior has distance zero.
    let n = (b - a).cross(c - a);
    let dp = (p - a).dot(n);
    let dq = (q - a).dot(n);
    if dp * dq < 0.0 && n.norm_squared() > 1e-18 {
        let t = dp / (dp - dq);
        let hit = p + (q - p) * t;
        if closest_point_on_triangle(hit, a, b, c).distance(hit) < 1e-12 {
            return 0.0;
        }
    }
    let mut best = f64::INFINITY;
    best = best.min(point_triangle_distance(p, a, b, c));
    best = best.min(point_triangle_distance(q, a, b, c));
    best = best.min(segment_segment_distance(p, q, a, b));
    best = best.min(segment_segment_distance(p, q, b, c));
    best = best.min(segment_segment_distance(p, q, c, a));
    best
}

/// Moeller-Trumbore, both-sided. Returns the ray parameter.
pub fn ray_triangle(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    if fabs(det) < 1e-14 {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(pvec) * inv_det;
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(e1);
    let v = dir.dot(qvec) * inv_det;
    if v < -1e-12 || u + v > 1.0 + 1e-12 {
        return None;
    }
    let t = e2.dot(qvec) * inv_det;
    if t > 1e-9 {
        Some(t)
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RayHit {
    pub t: f64,
    pub normal: Vec3,
}

/// Ray against a capsule: infinite-cylinder quadratic plus both cap spheres.
pub fn ray_capsule(origin: Vec3, dir: Vec3, cap: &Capsule) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    let mut consider = |t: f64, p: Vec3| {
        if t > 1e-9 && best.map_or(true, |h| t < h.t) {
            let (axis_pt, _) = closest_point_on_segment(p, cap.a, cap.b);
            let normal = (p - axis_pt).normalized();
            best = Some(RayHit { t, normal });
        }
    };

    let axis = cap.b - cap.a;
    let len2 = axis.norm_squared();
    if len2 > 1e-18 {
        // Components of the ray orthogonal to the capsule axis.
        let ao = origin - cap.a;
        let axis_n = axis / sqrt(len2);
        let d_perp = dir - axis_n * dir.dot(axis_n);
        let o_perp = ao - axis_n * ao.dot(axis_n);
        let a_q = d_perp.norm_squared();
        if a_q > 1e-18 {
            let b_q = 2.0 * o_perp.dot(d_perp);
            let c_q = o_perp.norm_squared() - cap.radius * cap.radius;
            let disc = b_q * b_q - 4.0 * a_q * c_q;
            if disc >= 0.0 {
                let sd = sqrt(disc);
                for t in [(-b_q - sd) / (2.0 * a_q), (-b_q + sd) / (2.0 * a_q)] {
                    let p = origin + dir * t;
                    // Valid only on the cylindrical body between the caps.
                    let along = (p - cap.a).dot(axis_n);
                    if (0.0..=sqrt(len2)).contains(&along) {
                        consider(t, p);
                    }
                }
            }
        }
    }

    for center in [cap.a, cap.b] {
        let oc = origin - center;
        let a_q = dir.norm_squared();
        let b_q = 2.0 * oc.dot(dir);
        let c_q = oc.norm_squared() - cap.radius * cap.radius;
        let disc = b_q * b_q - 4.0 * a_q * c_q;
        if disc >= 0.0 {
            let sd = sqrt(disc);
            for t in [(-b_q - sd) / (2.0 * a_q), (-b_q + sd) / (2.0 * a_q)] {
                consider(t, origin + dir * t);
            }
        }
    }
    best
}

/// Ray against an oriented box via the slab test in local space.
pub fn ray_obb(origin: Vec3, dir: Vec3, obb: &Obb) -> Option<RayHit> {
    let inv = obb.pose.inverse();
    let o = inv.transform_point(origin);
    let d = inv.transform_vector(dir);
    let mut t0 = 1e-9;
    let mut t1 = f64::INFINITY;
    let mut entry_axis = 0usize;
    let mut entry_sign = 1.0;
    for axis in 0..3 {
        let (oc, dc, h) = match axis {
            0 => (o.x, d.x, obb.half.x),
            1 => (o.y, d.y, obb.half.y),
            _ => (o.z, d.z, obb.half.z),
        };
        if fabs(dc) < 1e-14 {
            if fabs(oc) > h {
                return None;
            }
            continue;
        }
        let mut ta = (-h - oc) / dc;
        let mut tb = (h - oc) / dc;
        let mut sign = -1.0;
        if ta > tb {
            core::mem::swap(&mut ta, &mut tb);
            sign = 1.0;
        }
        if ta > t0 {
            t0 = ta;
            entry_axis = axis;
            entry_sign = sign;
        }
        t1 = t1.min(tb);
        if t0 > t1 {
            return None;
        }
    }
    if !t0.is_finite() || t0 <= 1e-9 || t0 > t1 {
        return None;
    }
    let local_normal = match entry_axis {
        0 => vec3(entry_sign, 0.0, 0.0),
        1 => vec3(0.0, entry_sign, 0.0),
        _ => vec3(0.0, 0.0, entry_sign),
    };
    Some(RayHit {
        t: t0,
        normal: obb.pose.transform_vector(local_normal),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Quat, PI};
    use crate::rng::SplitMix64;

    fn rand_vec(rng: &mut SplitMix64, r: f64) -> Vec3 {
        vec3(
            rng.uniform(-r, r),
            rng.uniform(-r, r),
            rng.uniform(-r, r),
        )
    }

    #[test]
    fn capsule_capsule_known_gap() {
        // Parallel vertical capsules 0.5 m apart, radii 0.1 and 0.15.
        let a = Capsule::new(vec3(0.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0), 0.1);
        let b = Capsule::new(vec3(0.5, 0.0, 0.2), vec3(0.5, 0.0, 0.8), 0.15);
        let d = capsule_capsule_distance(&a, &b);
        assert!(fabs(d - 0.25) < 1e-9, "d = {d}");
    }

    #[test]
    fn capsule_capsule_crossed_perpendicular() {
        // Crossing perpendicular segments: axis distance is the z offset.
        let a = Capsule::new(vec3(-1.0, 0.0, 0.0), vec3(1.0, 0.0, 0.0), 0.05);
        let b = Capsule::new(vec3(0.0, -1.0, 0.3), vec3(0.0, 1.0, 0.3), 0.05);
        let d = capsule_capsule_distance(&a, &b);
        assert!(fabs(d - 0.2) < 1e-9, "d = {d}");
    }

    #[test]
    fn segment_segment_matches_dense_sampling() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..200 {
            let (p1, q1) = (rand_vec(&mut rng, 2.0), rand_vec(&mut rng, 2.0));
            let (p2, q2) = (rand_vec(&mut rng, 2.0), rand_vec(&mut rng, 2.0));
            let fast = segment_segment_distance(p1, q1, p2, q2);
            let mut brute = f64::INFINITY;
            let n = 80;
            for i in 0..=n {
                for j in 0..=n {
                    let s = i as f64 / n as f64;
                    let t = j as f64 / n as f64;
                    brute = brute.min(p1.lerp(q1, s).distance(p2.lerp(q2, t)));
                }
            }
            assert!(fast <= brute + 1e-9, "fast {fast} brute {brute}");
            assert!(brute - fast < 0.08, "fast {fast} brute {brute}");
        }
    }

    #[test]
    fn box_face_gap_is_reported() {
        // Capsule hovering 1e-4 above a unit box face.
        let obb = Obb::new(Iso3::IDENTITY, vec3(0.5, 0.5, 0.5));
        let cap = Capsule::new(
            vec3(-0.2, 0.0, 0.5 + 0.1 + 1e-4),
            vec3(0.2, 0.0, 0.5 + 0.1 + 1e-4),
            0.1,
        );
        let d = capsule_obb_distance(&cap, &obb);
        assert!(fabs(d - 1e-4) < 1e-7, "d = {d}");
        assert!(d > 0.0);
    }

    #[test]
    fn capsule_box_penetration_is_negative() {
        let obb = Obb::new(Iso3::IDENTITY, vec3(0.5, 0.5, 0.5));
        let cap = Capsule::new(vec3(0.0, 0.0, 0.52), vec3(0.0, 0.0, 1.0), 0.1);
        let d = capsule_obb_distance(&cap, &obb);
        // Segment endpoint sits 0.02 above the face; the 0.1 radius dips
        // 0.08 into the box.
        assert!(fabs(d - (-0.08)) < 1e-6, "d = {d}");
    }

    #[test]
    fn segment_obb_matches_dense_sampling() {
        let mut rng = SplitMix64::new(22);
        for _ in 0..200 {
            let obb = Obb::new(
                Iso3::new(
                    rand_vec(&mut rng, 1.0),
                    Quat::from_rotvec(rand_vec(&mut rng, 2.0)),
                ),
                vec3(
                    rng.uniform(0.1, 1.0),
                    rng.uniform(0.1, 1.0),
                    rng.uniform(0.1, 1.0),
                ),
            );
            let a = rand_vec(&mut rng, 3.0);
            let b = rand_vec(&mut rng, 3.0);
            let fast = segment_obb_signed_distance(a, b, &obb);
            let n = 2000;
            let mut brute = f64::INFINITY;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                brute = brute.min(obb.signed_distance(a.lerp(b, t)));
            }
            // The signed distance is 1-Lipschitz, bounding the sampling error.
            let sample_err = a.distance(b) / (2.0 * n as f64);
            assert!(fast <= brute + 1e-9, "fast {fast} brute {brute}");
            assert!(
                brute - fast <= sample_err + 1e-9,
                "fast {fast} brute {brute} allowed {sample_err}"
            );
        }
    }

    #[test]
    fn obb_overlap_matches_aabb_when_axis_aligned() {
        let mut rng = SplitMix64::new(23);
        for _ in 0..500 {
            let a = Obb::new(
                Iso3::from_translation(rand_vec(&mut rng, 1.5)),
                vec3(
                    rng.uniform(0.1, 0.8),
                    rng.uniform(0.1, 0.8),
                    rng.uniform(0.1, 0.8),
                ),
            );
            let b = Obb::new(
                Iso3::from_translation(rand_vec(&mut rng, 1.5)),
                vec3(
                    rng.uniform(0.1, 0.8),
                    rng.uniform(0.1, 0.8),
                    rng.uniform(0.1, 0.8),
                ),
            );
            let sat = obb_obb_overlap(&a, &b);
            let aabb = a.aabb().overlaps(&b.aabb());
            assert_eq!(sat, aabb);
        }
    }

    #[test]
    fn obb_distance_on_separated_rotated_boxes() {
        // Unit box at origin; second box rotated 45 degrees about z, centered
        // 3 m away on x: the near corner reaches sqrt(2)/2 toward the first
        // box, whose face is at x = 0.5.
        let a = Obb::new(Iso3::IDENTITY, vec3(0.5, 0.5, 0.5));
        let b = Obb::new(
            Iso3::new(vec3(3.0, 0.0, 0.0), Quat::rot_z(PI / 4.0)),
            vec3(0.5, 0.5, 0.5),
        );
        let d = obb_obb_distance(&a, &b);
        let expected = 3.0 - 0.5 - sqrt(0.5);
        assert!(fabs(d - expected) < 1e-9, "d = {d}, expected {expected}");
    }

    #[test]
    fn segment_triangle_matches_dense_sampling() {
        let mut rng = SplitMix64::new(24);
        for _ in 0..200 {
            let (a, b, c) = (
                rand_vec(&mut rng, 1.5),
                rand_vec(&mut rng, 1.5),
                rand_vec(&mut rng, 1.5),
            );
            let (p, q) = (rand_vec(&mut rng, 2.0), rand_vec(&mut rng, 2.0));
            let fast = segment_triangle_distance(p, q, a, b, c);
            let mut brute = f64::INFINITY;
            let n = 60;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                let pt = p.lerp(q, t);
                for j in 0..=n {
                    for k in 0..=(n - j) {
                        let u = j as f64 / n as f64;
                        let v = k as f64 / n as f64;
                        let tri_pt = a + (b - a) * u + (c - a) * v;
                        brute = brute.min(pt.distance(tri_pt));
                    }
                }
            }
            assert!(fast <= brute + 1e-9, "fast {fast} brute {brute}");
            assert!(brute - fast < 0.1, "fast {fast} brute {brute}");
        }
    }

    #[test]
    fn ray_triangle_matches_plane_barycentric_oracle() {
        let mut rng = SplitMix64::new(25);
        let mut hits = 0;
        for _ in 0..2000 {
            let (a, b, c) = (
                rand_vec(&mut rng, 1.0),
                rand_vec(&mut rng, 1.0),
                rand_vec(&mut rng, 1.0),
            );
            let o = rand_vec(&mut rng, 3.0);
            // Aim half the rays near the triangle so the hit path gets real
            // coverage; leave the rest fully random for the miss path.
            let d = if rng.next_f64() < 0.5 {
                let centroid = (a + b + c) / 3.0;
                centroid + rand_vec(&mut rng, 0.4) - o
            } else {
                rand_vec(&mut rng, 1.0)
            };
            if d.norm() < 1e-3 {
                continue;
            }
            let got = ray_triangle(o, d, a, b, c);

            // Oracle: intersect the plane, then test barycentric containment.
            let n = (b - a).cross(c - a);
            let denom = n.dot(d);
            let want = if fabs(denom) < 1e-12 {
                None
            } else {
                let t = n.dot(a - o) / denom;
                if t <= 1e-9 {
                    None
                } else {
                    let p = o + d * t;
                    let v0 = b - a;
                    let v1 = c - a;
                    let v2 = p - a;
                    let d00 = v0.dot(v0);
                    let d01 = v0.dot(v1);
                    let d11 = v1.dot(v1);
                    let d20 = v2.dot(v0);
                    let d21 = v2.dot(v1);
                    let den = d00 * d11 - d01 * d01;
                    let v = (d11 * d20 - d01 * d21) / den;
                    let w = (d00 * d21 - d01 * d20) / den;
                    if v >= -1e-9 && w >= -1e-9 && v + w <= 1.0 + 1e-9 {
                        Some(t)
                    } else {
                        None
                    }
                }
            };
            match (got, want) {
                (Some(tg), Some(tw)) => {
                    hits += 1;
                    assert!(fabs(tg - tw) < 1e-9);
                }
                (None, None) => {}
                // Boundary-epsilon disagreements are acceptable only right at
                // the triangle edge.
                (Some(tg), None) | (None, Some(tg)) => {
                    let p = o + d * tg;
                    let edge_dist = point_triangle_distance(p, a, b, c);
                    assert!(edge_dist < 1e-6, "disagreement away from boundary");
                }
            }
        }
        assert!(hits > 50, "oracle exercised too few hits: {hits}");
    }

    #[test]
    fn ray_capsule_axial_and_lateral_hits() {
        let cap = Capsule::new(vec3(0.0, 0.0, -0.5), vec3(0.0, 0.0, 0.5), 0.2);
        // Straight at the side wall.
        let hit = ray_capsule(vec3(2.0, 0.0, 0.0), vec3(-1.0, 0.0, 0.0), &cap).unwrap();
        assert!(fabs(hit.t - 1.8) < 1e-9);
        assert!(hit.normal.distance(vec3(1.0, 0.0, 0.0)) < 1e-9);
        // Straight down onto the top cap.
        let hit = ray_capsule(vec3(0.0, 0.0, 2.0), vec3(0.0, 0.0, -1.0), &cap).unwrap();
        assert!(fabs(hit.t - 1.3) < 1e-9);
        assert!(hit.normal.distance(vec3(0.0, 0.0, 1.0)) < 1e-9);
        // Miss.
        assert!(ray_capsule(vec3(2.0, 0.5, 0.0), vec3(-1.0, 0.0, 0.0), &cap).is_none());
    }

    #[test]
    fn ray_obb_entry_face_and_normal() {
        let obb = Obb::new(
            Iso3::new(vec3(1.0, 0.0, 0.0), Quat::rot_z(PI / 2.0)),
            vec3(0.3, 0.2, 0.1),
        );
        // After the 90 degree yaw, the local y half-extent (0.2) lies along
        // world -x, so the near face is at x = 1.0 - 0.2.
        let hit = ray_obb(vec3(-1.0, 0.0, 0.0), vec3(1.0, 0.0, 0.0), &obb).unwrap();
        assert!(fabs(hit.t - 1.8) < 1e-9, "t = {}", hit.t);
        assert!(hit.normal.distance(vec3(-1.0, 0.0, 0.0)) < 1e-9);
    }

    #[test]
    fn ray_obb_inside_ray_reports_exit_none() {
        let obb = Obb::new(Iso3::IDENTITY, vec3(0.5, 0.5, 0.5));
        // Origin inside the box: entry parameter would be behind the origin.
        assert!(ray_obb(vec3(0.0, 0.0, 0.0), vec3(1.0, 0.0, 0.0), &obb).is_none());
    }

    #[test]
    fn signed_distance_inside_is_negative() {
        let obb = Obb::new(Iso3::IDENTITY, vec3(1.0, 2.0, 3.0));
        assert!(fabs(obb.signed_distance(vec3(0.0, 0.0, 0.0)) - (-1.0)) < 1e-12);
        assert!(fabs(obb.signed_distance(vec3(1.5, 0.0, 0.0)) - 0.5) < 1e-12);
        assert!(obb.contains(vec3(0.9, 1.9, 2.9)));
        assert!(!obb.contains(vec3(1.1, 0.0, 0.0)));
    }
}
