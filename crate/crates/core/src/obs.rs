//! Observation pipeline: ray-cast depth rendering of the assembled world,
//! part-labeled back-projection, seeded downsampling, and the fused policy
//! input.
//!
//! Rendering is pure per (world, camera, intrinsics), so one snapshot always
//! produces the same image, and the fused input is byte-stable for a fixed
//! seed. Depth is the z distance along the optical axis, not the ray length.

use alloc::vec;
use alloc::vec::Vec;

use crate::body::PosedHuman;
use crate::bvh::Bvh;
use crate::math::{look_rotation, tan, vec3, Iso3, Vec3, PI};
use crate::mesh::TriMesh;
use crate::robot::{robot_capsules, RobotModel};
use crate::rng::SplitMix64;
use crate::scene::{wall_boxes, SceneLayout};
use crate::shapes::{ray_capsule, ray_obb, Capsule, Obb};

/// Pinhole camera with a symmetric [near, far] depth range.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct CameraIntrinsics {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for CameraIntrinsics {
    /// 320 x 240 with a 60 degree horizontal field of view.
    fn default() -> CameraIntrinsics {
        let f = 160.0 / tan(PI / 6.0);
        CameraIntrinsics {
            width: 320,
            height: 240,
            fx: f,
            fy: f,
            cx: 160.0,
            cy: 120.0,
            near: 0.2,
            far: 5.0,
        }
    }
}

impl CameraIntrinsics {
    /// Unit camera-frame direction through the center of pixel (u, v):
    /// +z is the optical axis, +x right, +y down the image.
    pub fn pixel_ray(&self, u: usize, v: usize) -> Vec3 {
        vec3(
            (u as f64 + 0.5 - self.cx) / self.fx,
            (v as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        )
        .normalized()
    }
}

/// Camera pose at `eye` with the optical axis toward `target`. `up` is the
/// world up; the image +y then points down in the world, photographic style.
pub fn camera_look_at(eye: Vec3, target: Vec3, up: Vec3) -> Iso3 {
    Iso3::new(eye, look_rotation(target - eye, -up))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntityKind {
    Human,
    Furniture,
    Robot,
}

/// One rendered sample: z-depth plus what the ray hit. The stored normal is
/// the raw geometric one; orientation toward the camera is applied at
/// back-projection.
#[derive(Clone, Copy, Debug)]
pub struct PixelHit {
    pub depth: f64,
    pub entity: EntityKind,
    pub part: Option<usize>,
    pub normal: Vec3,
}

#[derive(Clone, Debug)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, `pixels[v * width + u]`.
    pub pixels: Vec<Option<PixelHit>>,
}

impl DepthImage {
    pub fn at(&self, u: usize, v: usize) -> &Option<PixelHit> {
        &self.pixels[v * self.width + u]
    }
}

pub struct RenderMesh {
    pub mesh: TriMesh,
    pub bvh: Bvh,
    pub entity: EntityKind,
    pub part: Option<usize>,
}

/// World-frame render snapshot.
#[derive(Default)]
pub struct ObsWorld {
    pub meshes: Vec<RenderMesh>,
    pub boxes: Vec<(EntityKind, Obb)>,
    pub capsules: Vec<(EntityKind, Capsule)>,
}

impl ObsWorld {
    pub fn empty() -> ObsWorld {
        ObsWorld::default()
    }

    pub fn add_mesh(&mut self, mesh: TriMesh, entity: EntityKind, part: Option<usize>) {
        let bvh = Bvh::build(&mesh);
        self.meshes.push(RenderMesh {
            mesh,
            bvh,
            entity,
            part,
        });
    }

    /// Human part meshes, furniture and walls as boxes, and optionally the
    /// robot's link capsules.
    pub fn from_scene(
        posed: &PosedHuman,
        layout: &SceneLayout,
        robot: Option<(&RobotModel, &[f64])>,
    ) -> ObsWorld {
        let mut world = ObsWorld::empty();
        for (i, seg) in posed.seg_world.iter().enumerate() {
            world.add_mesh(
                posed.model.meshes[i].transformed(seg),
                EntityKind::Human,
                Some(i),
            );
        }
        for obb in layout.obstacle_boxes(None) {
            world.boxes.push((EntityKind::Furniture, obb));
        }
        for obb in wall_boxes(&layout.room) {
            world.boxes.push((EntityKind::Furniture, obb));
        }
        if let Some((model, q)) = robot {
            for (_, cap) in robot_capsules(model, q) {
                world.capsules.push((EntityKind::Robot, cap));
            }
        }
        world
    }
}

/// Casts one ray through every pixel and keeps the nearest hit whose z-depth
/// falls inside the camera's depth range.
pub fn render_depth(world: &ObsWorld, camera: &Iso3, intr: &CameraIntrinsics) -> DepthImage {
    let mut pixels = vec![None; intr.width * intr.height];
    let origin = camera.trans;
    for v in 0..intr.height {
        for u in 0..intr.width {
            let d_cam = intr.pixel_ray(u, v);
            let dir = camera.rot.rotate(d_cam);
            let t_far = intr.far / d_cam.z;
            let mut best_t = t_far;
            let mut best: Option<PixelHit> = None;
            for rm in &world.meshes {
                if let Some(hit) = rm.bvh.ray_hit(&rm.mesh, origin, dir, best_t) {
                    best_t = hit.t;
                    best = Some(PixelHit {
                        depth: 0.0,
                        entity: rm.entity,
                        part: rm.part,
                        normal: rm.mesh.triangle_normal(hit.triangle),
                    });
                }
            }
            for (entity, obb) in &world.boxes {
                if let Some(hit) = ray_obb(origin, dir, obb) {
                    if hit.t < best_t {
                        best_t = hit.t;
                        best = Some(PixelHit {
                            depth: 0.0,
                            entity: *entity,
                            part: None,
                            normal: hit.normal,
                        });
                    }
                }
            }
            for (entity, cap) in &world.capsules {
                if let Some(hit) = ray_capsule(origin, dir, cap) {
                    if hit.t < best_t {
                        best_t = hit.t;
                        best = Some(PixelHit {
                            depth: 0.0,
                            entity: *entity,
                            part: None,
                            normal: hit.normal,
                        });
                    }
                }
            }
            if let Some(mut hit) = best {
                hit.depth = best_t * d_cam.z;
                if hit.depth >= intr.near {
                    pixels[v * intr.width + u] = Some(hit);
                }
            }
        }
    }
    DepthImage {
        width: intr.width,
        height: intr.height,
        pixels,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointLabel {
    pub entity: EntityKind,
    pub part: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct LabeledPointCloud {
    pub points: Vec<Vec3>,
    pub labels: Vec<PointLabel>,
    pub normals: Vec<Vec3>,
    /// World frame when true, camera frame otherwise.
    pub world_frame: bool,
}

impl LabeledPointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Back-projects the human pixels whose part is in `wanted_parts` into a
/// world-frame cloud, normals flipped to face the camera.
pub fn backproject_segment(
    img: &DepthImage,
    intr: &CameraIntrinsics,
    camera: &Iso3,
    wanted_parts: &[usize],
) -> LabeledPointCloud {
    let mut cloud = LabeledPointCloud {
        world_frame: true,
        ..Default::default()
    };
    for v in 0..img.height {
        for u in 0..img.width {
            let Some(hit) = img.at(u, v) else { continue };
            if hit.entity != EntityKind::Human {
                continue;
            }
            let Some(part) = hit.part else { continue };
            if !wanted_parts.contains(&part) {
                continue;
            }
            let z = hit.depth;
            let p_cam = vec3(
                (u as f64 + 0.5 - intr.cx) / intr.fx * z,
                (v as f64 + 0.5 - intr.cy) / intr.fy * z,
                z,
            );
            let p = camera.transform_point(p_cam);
            let view = camera.rot.rotate(p_cam.normalized());
            let n = if hit.normal.dot(view) > 0.0 {
                -hit.normal
            } else {
                hit.normal
            };
            cloud.points.push(p);
            cloud.normals.push(n);
            cloud.labels.push(PointLabel {
                entity: EntityKind::Human,
                part: Some(part),
            });
        }
    }
    cloud
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ObsError {
    #[error("cloud has {have} points, need at least {need}")]
    InsufficientPoints { have: usize, need: usize },
    #[error("fused input needs exactly {need} cloud points, got {have}")]
    WrongCloudSize { have: usize, need: usize },
}

fn select(cloud: &LabeledPointCloud, idx: &[usize]) -> LabeledPointCloud {
    LabeledPointCloud {
        points: idx.iter().map(|&i| cloud.points[i]).collect(),
        labels: idx.iter().map(|&i| cloud.labels[i]).collect(),
        normals: idx.iter().map(|&i| cloud.normals[i]).collect(),
        world_frame: cloud.world_frame,
    }
}

/// Seeded uniform subset of exactly `n` points, without replacement.
pub fn downsample(
    cloud: &LabeledPointCloud,
    n: usize,
    seed: u64,
) -> Result<LabeledPointCloud, ObsError> {
    if cloud.len() < n {
        return Err(ObsError::InsufficientPoints {
            have: cloud.len(),
            need: n,
        });
    }
    let mut idx: Vec<usize> = (0..cloud.len()).collect();
    let mut rng = SplitMix64::new(seed);
    for i in 0..n {
        let j = i + rng.index(cloud.len() - i);
        idx.swap(i, j);
    }
    idx.truncate(n);
    Ok(select(cloud, &idx))
}

/// Farthest-point subset: seeded start, then greedy max-min selection. More
/// even spatially than `downsample`; ties resolve to the lowest index.
pub fn farthest_point_downsample(
    cloud: &LabeledPointCloud,
    n: usize,
    seed: u64,
) -> Result<LabeledPointCloud, ObsError> {
    if cloud.len() < n {
        return Err(ObsError::InsufficientPoints {
            have: cloud.len(),
            need: n,
        });
    }
    if n == 0 {
        return Ok(select(cloud, &[]));
    }
    let mut rng = SplitMix64::new(seed);
    let first = rng.index(cloud.len());
    let mut chosen = vec![first];
    let mut dist: Vec<f64> = cloud
        .points
        .iter()
        .map(|p| (*p - cloud.points[first]).norm_squared())
        .collect();
    while chosen.len() < n {
        let mut best_i = 0;
        let mut best_d = -1.0;
        for (i, &d) in dist.iter().enumerate() {
            if d > best_d {
                best_d = d;
                best_i = i;
            }
        }
        chosen.push(best_i);
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min((cloud.points[i] - cloud.points[best_i]).norm_squared());
        }
    }
    Ok(select(cloud, &chosen))
}

/// Canonical tool-frame gripper marker points.
pub const GRIPPER_OFFSETS: [Vec3; 4] = [
    Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    },
    Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.05,
    },
    Vec3 {
        x: 0.0,
        y: 0.03,
        z: 0.08,
    },
    Vec3 {
        x: 0.0,
        y: -0.03,
        z: 0.08,
    },
];

pub fn gripper_points(tool_pose: &Iso3) -> [Vec3; 4] {
    GRIPPER_OFFSETS.map(|p| tool_pose.transform_point(p))
}

pub const POLICY_CLOUD_POINTS: usize = 1500;
pub const POLICY_INPUT_ROWS: usize = 1505;

/// Fused policy input: 1500 cloud rows flagged (1,0,0), 4 gripper rows
/// (0,1,0), and the target row (0,0,1); columns (x, y, z, r0, r1, r2).
pub fn fuse_policy_input(
    cloud: &LabeledPointCloud,
    gripper: &[Vec3; 4],
    target: Vec3,
) -> Result<Vec<[f64; 6]>, ObsError> {
    if cloud.len() != POLICY_CLOUD_POINTS {
        return Err(ObsError::WrongCloudSize {
            have: cloud.len(),
            need: POLICY_CLOUD_POINTS,
        });
    }
    let mut rows = Vec::with_capacity(POLICY_INPUT_ROWS);
    for p in &cloud.points {
        rows.push([p.x, p.y, p.z, 1.0, 0.0, 0.0]);
    }
    for p in gripper {
        rows.push([p.x, p.y, p.z, 0.0, 1.0, 0.0]);
    }
    rows.push([target.x, target.y, target.z, 0.0, 0.0, 1.0]);
    Ok(rows)
}
