//! Triangle meshes and the tessellators that produce them.
//!
//! Capsules tessellate as 16 segments around the axis and 12 latitude bands
//! (6 per hemispherical cap) joined by one cylindrical band; ellipsoids as a
//! 16 x 12 UV sphere scaled by the semi-axes. Every generated vertex lies
//! exactly on the analytic surface, and all generated meshes are watertight
//! with outward winding.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use core::fmt::Write as _;

use crate::math::{cos, sin, vec3, Iso3, Vec3, PI};
use crate::shapes::{segment_triangle_distance, Aabb, Capsule, Obb};

pub const CAPSULE_SEGMENTS: usize = 16;
pub const CAPSULE_BANDS: usize = 12;

#[derive(Clone, Debug, Default)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn transformed(&self, iso: &Iso3) -> TriMesh {
        TriMesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| iso.transform_point(*v))
                .collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn aabb(&self) -> Aabb {
        let mut bb = Aabb::empty();
        for v in &self.vertices {
            bb.grow(*v);
        }
        bb
    }

    pub fn triangle_vertices(&self, i: usize) -> (Vec3, Vec3, Vec3) {
        let [a, b, c] = self.triangles[i];
        (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        )
    }

    /// Geometric normal of triangle `i`, following the winding order.
    pub fn triangle_normal(&self, i: usize) -> Vec3 {
        let (a, b, c) = self.triangle_vertices(i);
        (b - a).cross(c - a).normalized()
    }

    /// Appends another mesh, returning the triangle index range it occupies.
    pub fn append(&mut self, other: &TriMesh) -> core::ops::Range<usize> {
        let base = self.vertices.len() as u32;
        let tri_start = self.triangles.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        tri_start..self.triangles.len()
    }

    /// Every undirected edge must be shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        let mut edges: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                if a == b {
                    return false;
                }
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        edges.values().all(|&c| c == 2)
    }

    /// Signed enclosed volume (positive when winding is outward).
    pub fn signed_volume(&self) -> f64 {
        let mut v = 0.0;
        for i in 0..self.triangles.len() {
            let (a, b, c) = self.triangle_vertices(i);
            v += a.dot(b.cross(c)) / 6.0;
        }
        v
    }

    /// Brute-force distance from a point to the surface.
    pub fn point_distance(&self, p: Vec3) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.triangles.len() {
            let (a, b, c) = self.triangle_vertices(i);
            best = best.min(crate::shapes::point_triangle_distance(p, a, b, c));
        }
        best
    }

    /// Brute-force distance from a segment to the surface.
    pub fn segment_distance(&self, s0: Vec3, s1: Vec3) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.triangles.len() {
            let (a, b, c) = self.triangle_vertices(i);
            best = best.min(segment_triangle_distance(s0, s1, a, b, c));
            if best == 0.0 {
                break;
            }
        }
        best
    }
}

/// Capsule surface mesh in the capsule's own frame (axis from `a` to `b`).
pub fn tessellate_capsule(cap: &Capsule) -> TriMesh {
    let axis = cap.b - cap.a;
    let len = axis.norm();
    let z = if len < 1e-12 { Vec3::Z } else { axis / len };
    let x = if crate::math::fabs(z.z) < 0.9 {
        Vec3::Z.cross(z).normalized()
    } else {
        Vec3::X.cross(z).normalized()
    };
    let y = z.cross(x);

    let n = CAPSULE_SEGMENTS;
    let half_bands = CAPSULE_BANDS / 2;
    let mut mesh = TriMesh::default();

    // Bottom pole, 12 rings (6 per hemisphere), top pole.
    mesh.vertices.push(cap.a - z * cap.radius);
    for band in 1..=half_bands {
        // Latitude from the bottom pole (-pi/2) up to the equator (0).
        let phi = -PI / 2.0 + PI / 2.0 * band as f64 / half_bands as f64;
        push_ring(&mut mesh, cap.a, x, y, z, cap.radius, phi, n);
    }
    for band in 0..half_bands {
        let phi = PI / 2.0 * band as f64 / half_bands as f64;
        push_ring(&mut mesh, cap.b, x, y, z, cap.radius, phi, n);
    }
    mesh.vertices.push(cap.b + z * cap.radius);
    let top_pole = (mesh.vertices.len() - 1) as u32;

    let ring = |r: usize, s: usize| (1 + r * n + (s % n)) as u32;

    for s in 0..n {
        mesh.triangles.push([0, ring(0, s + 1), ring(0, s)]);
    }
    let total_rings = 2 * half_bands;
    for r in 0..total_rings - 1 {
        for s in 0..n {
            let a0 = ring(r, s);
            let a1 = ring(r, s + 1);
            let b0 = ring(r + 1, s);
            let b1 = ring(r + 1, s + 1);
            mesh.triangles.push([a0, a1, b1]);
            mesh.triangles.push([a0, b1, b0]);
        }
    }
    for s in 0..n {
        mesh.triangles
            .push([ring(total_rings - 1, s), ring(total_rings - 1, s + 1), top_pole]);
    }
    mesh
}

fn push_ring(
    mesh: &mut TriMesh,
    center: Vec3,
    x: Vec3,
    y: Vec3,
    z: Vec3,
    radius: f64,
    phi: f64,
    n: usize,
) {
    let ring_r = radius * cos(phi);
    let ring_z = radius * sin(phi);
    for s in 0..n {
        let theta = 2.0 * PI * s as f64 / n as f64;
        mesh.vertices
            .push(center + x * (ring_r * cos(theta)) + y * (ring_r * sin(theta)) + z * ring_z);
    }
}

/// Axis-aligned ellipsoid centered at the origin with the given semi-axes.
pub fn tessellate_ellipsoid(semi: Vec3) -> TriMesh {
    let n = CAPSULE_SEGMENTS;
    let bands = CAPSULE_BANDS;
    let mut mesh = TriMesh::default();
    mesh.vertices.push(vec3(0.0, 0.0, -semi.z));
    for band in 1..bands {
        let phi = -PI / 2.0 + PI * band as f64 / bands as f64;
        for s in 0..n {
            let theta = 2.0 * PI * s as f64 / n as f64;
            mesh.vertices.push(vec3(
                semi.x * cos(phi) * cos(theta),
                semi.y * cos(phi) * sin(theta),
                semi.z * sin(phi),
            ));
        }
    }
    mesh.vertices.push(vec3(0.0, 0.0, semi.z));
    let top_pole = (mesh.vertices.len() - 1) as u32;
    let ring = |r: usize, s: usize| (1 + r * n + (s % n)) as u32;

    for s in 0..n {
        mesh.triangles.push([0, ring(0, s + 1), ring(0, s)]);
    }
    for r in 0..bands - 2 {
        for s in 0..n {
            let a0 = ring(r, s);
            let a1 = ring(r, s + 1);
            let b0 = ring(r + 1, s);
            let b1 = ring(r + 1, s + 1);
            mesh.triangles.push([a0, a1, b1]);
            mesh.triangles.push([a0, b1, b0]);
        }
    }
    for s in 0..n {
        mesh.triangles
            .push([ring(bands - 2, s), ring(bands - 2, s + 1), top_pole]);
    }
    mesh
}

/// Box mesh in the box's local frame.
pub fn tessellate_box(half: Vec3) -> TriMesh {
    let mut mesh = TriMesh::default();
    for i in 0..8usize {
        mesh.vertices.push(vec3(
            if i & 1 != 0 { half.x } else { -half.x },
            if i & 2 != 0 { half.y } else { -half.y },
            if i & 4 != 0 { half.z } else { -half.z },
        ));
    }
    // Quads per face, outward winding, split into triangles.
    let faces: [[u32; 4]; 6] = [
        [1, 3, 7, 5], // +x
        [2, 0, 4, 6], // -x
        [3, 2, 6, 7], // +y
        [0, 1, 5, 4], // -y
        [4, 5, 7, 6], // +z
        [0, 2, 3, 1], // -z
    ];
    for f in faces {
        mesh.triangles.push([f[0], f[1], f[2]]);
        mesh.triangles.push([f[0], f[2], f[3]]);
    }
    mesh
}

pub fn tessellate_obb(obb: &Obb) -> TriMesh {
    tessellate_box(obb.half).transformed(&obb.pose)
}

/// ASCII PLY for a triangle mesh.
pub fn mesh_to_ply(mesh: &TriMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ply");
    let _ = writeln!(out, "format ascii 1.0");
    let _ = writeln!(out, "element vertex {}", mesh.vertices.len());
    let _ = writeln!(out, "property float x");
    let _ = writeln!(out, "property float y");
    let _ = writeln!(out, "property float z");
    let _ = writeln!(out, "element face {}", mesh.triangles.len());
    let _ = writeln!(out, "property list uchar int vertex_indices");
    let _ = writeln!(out, "end_header");
    for v in &mesh.vertices {
        let _ = writeln!(out, "{} {} {}", v.x as f32, v.y as f32, v.z as f32);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    out
}

/// ASCII PLY for a labeled, oriented point cloud
/// (`x y z nx ny nz label` per point).
pub fn cloud_to_ply(points: &[Vec3], normals: &[Vec3], labels: &[u8]) -> String {
    debug_assert_eq!(points.len(), normals.len());
    debug_assert_eq!(points.len(), labels.len());
    let mut out = String::new();
    let _ = writeln!(out, "ply");
    let _ = writeln!(out, "format ascii 1.0");
    let _ = writeln!(out, "element vertex {}", points.len());
    for p in ["x", "y", "z", "nx", "ny", "nz"] {
        let _ = writeln!(out, "property float {p}");
    }
    let _ = writeln!(out, "property uchar label");
    let _ = writeln!(out, "end_header");
    for i in 0..points.len() {
        let p = points[i];
        let n = normals[i];
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            p.x as f32, p.y as f32, p.z as f32, n.x as f32, n.y as f32, n.z as f32, labels[i]
        );
    }
    out
}
