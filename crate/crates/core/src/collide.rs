//! Collision queries over heterogeneous shape collections.
//!
//! `collide` reports the minimum distance between two collections and
//! whether they penetrate. Capsule and box pairs are analytic and signed;
//! mesh pairs measure surface proximity per triangle, so a deeply contained
//! shape that touches no triangle reads as separated. Every query in this
//! simulator is a shallow-contact check, where surface distance is the
//! quantity of interest.

use alloc::vec::Vec;

use crate::mesh::TriMesh;
use crate::shapes::{
    capsule_capsule_distance, capsule_obb_distance, obb_obb_distance, point_triangle_distance,
    segment_obb_signed_distance, segment_triangle_distance, Aabb, Capsule, Obb,
};

/// Penetration deeper than this counts as a collision.
pub const CONTACT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub enum Shape<'a> {
    Capsule(Capsule),
    Box(Obb),
    Mesh(&'a TriMesh),
}

impl Shape<'_> {
    pub fn aabb(&self) -> Aabb {
        match self {
            Shape::Capsule(c) => c.aabb(),
            Shape::Box(b) => b.aabb(),
            Shape::Mesh(m) => m.aabb(),
        }
    }
}

fn capsule_mesh_distance(c: &Capsule, m: &TriMesh) -> f64 {
    m.segment_distance(c.a, c.b) - c.radius
}

fn box_mesh_distance(b: &Obb, m: &TriMesh) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..m.triangles.len() {
        let (p, q, r) = m.triangle_vertices(i);
        for (s0, s1) in [(p, q), (q, r), (r, p)] {
            best = best.min(segment_obb_signed_distance(s0, s1, b));
        }
        for corner in b.corners() {
            best = best.min(point_triangle_distance(corner, p, q, r));
        }
    }
    best
}

fn mesh_mesh_distance(a: &TriMesh, b: &TriMesh) -> f64 {
    let mut best = f64::INFINITY;
    let edge_scan = |from: &TriMesh, to: &TriMesh, best: &mut f64| {
        for i in 0..from.triangles.len() {
            let (p, q, r) = from.triangle_vertices(i);
            for (s0, s1) in [(p, q), (q, r), (r, p)] {
                for j in 0..to.triangles.len() {
                    let (a2, b2, c2) = to.triangle_vertices(j);
                    *best = best.min(segment_triangle_distance(s0, s1, a2, b2, c2));
                    if *best == 0.0 {
                        return;
                    }
                }
            }
        }
    };
    edge_scan(a, b, &mut best);
    if best > 0.0 {
        edge_scan(b, a, &mut best);
    }
    best
}

/// Minimum distance between two shapes. Dispatch is canonicalized so the
/// identical arithmetic runs regardless of argument order.
pub fn shape_distance(a: &Shape, b: &Shape) -> f64 {
    match (a, b) {
        (Shape::Capsule(x), Shape::Capsule(y)) => capsule_capsule_distance(x, y),
        (Shape::Capsule(c), Shape::Box(o)) | (Shape::Box(o), Shape::Capsule(c)) => {
            capsule_obb_distance(c, o)
        }
        (Shape::Capsule(c), Shape::Mesh(m)) | (Shape::Mesh(m), Shape::Capsule(c)) => {
            capsule_mesh_distance(c, m)
        }
        (Shape::Box(x), Shape::Box(y)) => obb_obb_distance(x, y),
        (Shape::Box(o), Shape::Mesh(m)) | (Shape::Mesh(m), Shape::Box(o)) => {
            box_mesh_distance(o, m)
        }
        (Shape::Mesh(x), Shape::Mesh(y)) => mesh_mesh_distance(x, y),
    }
}

/// Minimum distance between the two collections, and whether any pair
/// penetrates deeper than [`CONTACT_TOLERANCE`]. Empty collections never
/// collide and report infinite distance.
pub fn collide(shapes_a: &[Shape], shapes_b: &[Shape]) -> (bool, f64) {
    let mut min_dist = f64::INFINITY;
    for a in shapes_a {
        for b in shapes_b {
            let d = shape_distance(a, b);
            if d < min_dist {
                min_dist = d;
            }
        }
    }
    (min_dist < -CONTACT_TOLERANCE, min_dist)
}

/// Fast boolean probe with a safety margin: true when any pair comes closer
/// than `margin`. Bounding boxes prune pairs, and the scan exits on the
/// first hit, so this is the form planners call in their inner loop.
pub fn any_closer_than(shapes_a: &[Shape], shapes_b: &[Shape], margin: f64) -> bool {
    let boxes_a: Vec<Aabb> = shapes_a.iter().map(|s| s.aabb()).collect();
    let boxes_b: Vec<Aabb> = shapes_b.iter().map(|s| s.aabb()).collect();
    for (a, ba) in shapes_a.iter().zip(&boxes_a) {
        for (b, bb) in shapes_b.iter().zip(&boxes_b) {
            if aabb_gap_exceeds(ba, bb, margin) {
                continue;
            }
            if shape_distance(a, b) < margin {
                return true;
            }
        }
    }
    false
}

fn aabb_gap_exceeds(a: &Aabb, b: &Aabb, margin: f64) -> bool {
    let gap = |lo_a: f64, hi_a: f64, lo_b: f64, hi_b: f64| (lo_b - hi_a).max(lo_a - hi_b);
    let gx = gap(a.min.x, a.max.x, b.min.x, b.max.x);
    let gy = gap(a.min.y, a.max.y, b.min.y, b.max.y);
    let gz = gap(a.min.z, a.max.z, b.min.z, b.max.z);
    gx.max(gy).max(gz) > margin
}

/// Largest penetration depth across all pairs, as a positive number; zero
/// when nothing penetrates.
pub fn max_penetration(shapes_a: &[Shape], shapes_b: &[Shape]) -> f64 {
    let (_, d) = collide(shapes_a, shapes_b);
    if d.is_finite() {
        (-d).max(0.0)
    } else {
        0.0
    }
}

pub fn capsule_shapes(caps: &[Capsule]) -> Vec<Shape<'static>> {
    caps.iter().map(|c| Shape::Capsule(*c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::math::{vec3, Iso3};
    use crate::mesh::tessellate_capsule;

    fn sphere(center: Vec3, radius: f64) -> Capsule {
        Capsule::new(center, center, radius)
    }

    #[test]
    fn separated_unit_spheres_report_their_gap() {
        let a = [Shape::Capsule(sphere(vec3(0.0, 0.0, 0.0), 1.0))];
        let b = [Shape::Capsule(sphere(vec3(3.0, 0.0, 0.0), 1.0))];
        let (hit, d) = collide(&a, &b);
        assert!(!hit);
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_capsules_fully_overlap() {
        let c = Capsule::new(vec3(0.0, 0.0, 0.0), vec3(0.0, 0.0, 0.4), 0.13);
        let (hit, d) = collide(&[Shape::Capsule(c)], &[Shape::Capsule(c)]);
        assert!(hit);
        assert!((d + 2.0 * 0.13).abs() < 1e-12);
    }

    #[test]
    fn capsule_grazing_a_box_face_sits_at_zero() {
        let obb = Obb::new(Iso3::IDENTITY, vec3(0.5, 0.5, 0.5));
        let cap = Capsule::new(vec3(-0.3, 0.7, 0.0), vec3(0.3, 0.7, 0.0), 0.2);
        let (hit, d) = collide(&[Shape::Box(obb)], &[Shape::Capsule(cap)]);
        assert!(!hit);
        assert!(d.abs() < 1e-6, "grazing distance {d}");
    }

    #[test]
    fn collision_is_symmetric_across_all_shape_kinds() {
        let mesh = tessellate_capsule(&Capsule::new(
            vec3(0.3, 0.1, 0.0),
            vec3(0.3, 0.1, 0.5),
            0.12,
        ));
        let shapes_a = [
            Shape::Capsule(Capsule::new(vec3(0.0, 0.0, 0.0), vec3(0.2, 0.0, 0.3), 0.1)),
            Shape::Box(Obb::new(Iso3::planar(0.4, -0.2, 0.7), vec3(0.2, 0.15, 0.1))),
        ];
        let shapes_b = [
            Shape::Mesh(&mesh),
            Shape::Capsule(Capsule::new(vec3(-0.5, 0.4, 0.1), vec3(0.5, 0.4, 0.1), 0.05)),
            Shape::Box(Obb::new(Iso3::planar(-0.3, 0.3, 0.2), vec3(0.1, 0.1, 0.4))),
        ];
        let (hit_ab, d_ab) = collide(&shapes_a, &shapes_b);
        let (hit_ba, d_ba) = collide(&shapes_b, &shapes_a);
        assert_eq!(hit_ab, hit_ba);
        assert!((d_ab - d_ba).abs() < 1e-9);
    }

    #[test]
    fn capsule_to_mesh_distance_tracks_the_analytic_surface() {
        let body = Capsule::new(vec3(0.0, 0.0, 0.0), vec3(0.0, 0.0, 0.6), 0.15);
        let mesh = tessellate_capsule(&body);
        let probe = Capsule::new(vec3(0.5, 0.0, 0.3), vec3(0.8, 0.0, 0.3), 0.05);
        let (hit, d) = collide(&[Shape::Mesh(&mesh)], &[Shape::Capsule(probe)]);
        assert!(!hit);
        // Analytic gap 0.5 - 0.15 - 0.05 = 0.3; tessellation makes the
        // mesh slightly inscribed, so the measured gap is barely larger.
        assert!((d - 0.3).abs() < 5e-3, "gap {d}");
    }

    #[test]
    fn empty_collections_never_collide() {
        let (hit, d) = collide(&[], &[]);
        assert!(!hit);
        assert!(d.is_infinite());
    }

    #[test]
    fn margin_probe_agrees_with_full_distances() {
        let a = [Shape::Capsule(sphere(vec3(0.0, 0.0, 0.0), 0.1))];
        let b = [Shape::Capsule(sphere(vec3(1.0, 0.0, 0.0), 0.1))];
        assert!(!any_closer_than(&a, &b, 0.5));
        assert!(any_closer_than(&a, &b, 0.9));
    }
}
