//! Bounding-volume hierarchy over mesh triangles for ray casting.
//!
//! Median split on the longest centroid axis with index tie-breaks, so the
//! tree (and every query answer) is a deterministic function of the mesh.

use alloc::vec::Vec;

use crate::math::{vec3, Vec3};
use crate::mesh::TriMesh;
use crate::shapes::{ray_triangle, Aabb};

#[derive(Clone, Debug)]
struct Node {
    aabb: Aabb,
    left: u32,
    right: u32,
    start: u32,
    count: u32,
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

#[derive(Clone, Copy, Debug)]
pub struct MeshHit {
    pub t: f64,
    pub triangle: usize,
}

const LEAF_SIZE: usize = 4;

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Bvh {
        let n = mesh.triangles.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let centroids: Vec<Vec3> = (0..n)
            .map(|i| {
                let (a, b, c) = mesh.triangle_vertices(i);
                (a + b + c) / 3.0
            })
            .collect();
        let tri_aabbs: Vec<Aabb> = (0..n)
            .map(|i| {
                let (a, b, c) = mesh.triangle_vertices(i);
                let mut bb = Aabb::empty();
                bb.grow(a);
                bb.grow(b);
                bb.grow(c);
                bb
            })
            .collect();

        let mut bvh = Bvh {
            nodes: Vec::new(),
            order: Vec::new(),
        };
        if n == 0 {
            bvh.nodes.push(Node {
                aabb: Aabb {
                    min: vec3(0.0, 0.0, 0.0),
                    max: vec3(0.0, 0.0, 0.0),
                },
                left: 0,
                right: 0,
                start: 0,
                count: 0,
            });
            return bvh;
        }
        bvh.split(&mut order, 0, &centroids, &tri_aabbs);
        bvh.order = order;
        bvh
    }

    fn split(
        &mut self,
        order: &mut [u32],
        offset: usize,
        centroids: &[Vec3],
        tri_aabbs: &[Aabb],
    ) -> u32 {
        let mut aabb = Aabb::empty();
        let mut centroid_bb = Aabb::empty();
        for &t in order.iter() {
            aabb = aabb.union(&tri_aabbs[t as usize]);
            centroid_bb.grow(centroids[t as usize]);
        }
        let node_index = self.nodes.len() as u32;
        self.nodes.push(Node {
            aabb,
            left: 0,
            right: 0,
            start: offset as u32,
            count: order.len() as u32,
        });
        if order.len() <= LEAF_SIZE {
            return node_index;
        }
        let axis = centroid_bb.longest_axis();
        order.sort_by(|&a, &b| {
            let ca = centroids[a as usize].component(axis);
            let cb = centroids[b as usize].component(axis);
            ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
        });
        let mid = order.len() / 2;
        let (lo, hi) = order.split_at_mut(mid);
        let left = self.split(lo, offset, centroids, tri_aabbs);
        let right = self.split(hi, offset + mid, centroids, tri_aabbs);
        self.nodes[node_index as usize].left = left;
        self.nodes[node_index as usize].right = right;
        self.nodes[node_index as usize].count = 0;
        node_index
    }

    /// Closest triangle intersection along the ray, if any within `t_max`.
    pub fn ray_hit(&self, mesh: &TriMesh, origin: Vec3, dir: Vec3, t_max: f64) -> Option<MeshHit> {
        if self.order.is_empty() {
            return None;
        }
        let dir_inv = vec3(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<MeshHit> = None;
        let mut best_t = t_max;
        let mut stack: Vec<u32> = alloc::vec![0];
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx as usize];
            if node.aabb.ray_hit(origin, dir_inv, 0.0, best_t).is_none() {
                continue;
            }
            if node.count > 0 {
                for k in node.start..node.start + node.count {
                    let tri = self.order[k as usize] as usize;
                    let (a, b, c) = mesh.triangle_vertices(tri);
                    if let Some(t) = ray_triangle(origin, dir, a, b, c) {
                        if t < best_t {
                            best_t = t;
                            best = Some(MeshHit { t, triangle: tri });
                        }
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        best
    }
}
