//! Scene layouts and placement: room sampling, affordance-based furniture
//! selection, completion of missing seats, seat anchors, and the seated
//! human plus robot base placement.
//!
//! Rooms span `[0, width] x [0, depth]` on the floor plane with `+z` up.
//! Furniture poses give the box center and a yaw about `+z`; `forward_axis`
//! is the local direction a seated occupant faces.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::body::{part_index, HumanModel, PosedHuman};
use crate::collide::{collide, Shape};
use crate::math::{atan2, vec3, wrap_angle, Iso3, Quat, Vec3, PI};
use crate::motion::{eval_program, BasePlacement, EvalOutput, GroundingContext, MotionProgram};
use crate::rng::SplitMix64;
use crate::robot::{robot_capsules, DofKind, RobotModel};
use crate::scenario::{Posture, ScenarioSpec};
use crate::shapes::{obb_obb_distance, obb_obb_overlap, Obb};

pub const ROOM_HEIGHT: f64 = 2.7;
pub const WALL_THICKNESS: f64 = 0.1;
/// Depth of the free corridor a robot needs beside a seat.
pub const ACCESS_MARGIN: f64 = 0.8;
/// Band below the maximal forward projection that still counts as the seat
/// front when picking the anchor vertex.
pub const ANCHOR_BAND: f64 = 0.02;
/// Largest tolerated human-into-seat penetration.
pub const SEAT_TOLERANCE: f64 = 0.005;
/// Occupancy grid pitch for scene completion.
pub const COMPLETION_GRID: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    #[serde(rename = "type")]
    pub kind: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Provider,
    Procedural,
    CompletionAugmented,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FurnitureGeometry {
    Box { extents: Vec3 },
    MeshFile { path: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FurniturePose {
    pub position: Vec3,
    pub yaw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FurnitureEntry {
    pub id: String,
    pub category: String,
    pub geometry: FurnitureGeometry,
    pub pose: FurniturePose,
    pub forward_axis: Vec3,
}

impl FurnitureEntry {
    pub fn iso(&self) -> Iso3 {
        Iso3::new(self.pose.position, Quat::rot_z(self.pose.yaw))
    }

    /// World-frame oriented box, when the geometry is a box.
    pub fn obb(&self) -> Option<Obb> {
        match &self.geometry {
            FurnitureGeometry::Box { extents } => {
                Some(Obb::new(self.iso(), *extents * 0.5))
            }
            FurnitureGeometry::MeshFile { .. } => None,
        }
    }

    pub fn forward_world(&self) -> Vec3 {
        Quat::rot_z(self.pose.yaw).rotate(self.forward_axis)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub room: Room,
    pub furniture: Vec<FurnitureEntry>,
    pub provenance: Provenance,
}

impl SceneLayout {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serialization cannot fail")
    }

    pub fn entry(&self, id: &str) -> Option<&FurnitureEntry> {
        self.furniture.iter().find(|f| f.id == id)
    }

    /// Collision boxes of every furniture entry except `skip`.
    pub fn obstacle_boxes(&self, skip: Option<&str>) -> Vec<Obb> {
        self.furniture
            .iter()
            .filter(|f| Some(f.id.as_str()) != skip)
            .filter_map(|f| f.obb())
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("no collision-free arrangement: {0}")]
    LayoutInfeasible(String),
    #[error("malformed layout: {0}")]
    MalformedResponse(String),
    #[error("no furniture affords posture {0}")]
    NoAffordance(&'static str),
    #[error("no free floor space for the completion asset")]
    NoFreeSpace,
    #[error("furniture mesh has no vertices")]
    EmptyMesh,
    #[error("human placement collides: {0}")]
    PlacementCollision(String),
    #[error("no collision-free robot pose in {0} attempts")]
    RobotPlacementFailed(usize),
}

impl SceneError {
    pub fn code(&self) -> &'static str {
        match self {
            SceneError::LayoutInfeasible(_) => "layout_infeasible",
            SceneError::MalformedResponse(_) => "malformed_response",
            SceneError::NoAffordance(_) => "no_affordance",
            SceneError::NoFreeSpace => "no_free_space",
            SceneError::EmptyMesh => "empty_mesh",
            SceneError::PlacementCollision(_) => "placement_collision",
            SceneError::RobotPlacementFailed(_) => "robot_placement_failed",
        }
    }
}

pub const SITTING_AFFORDANCE: [&str; 5] = ["chair", "sofa", "couch", "stool", "bench"];
pub const LYING_AFFORDANCE: [&str; 3] = ["bed", "sofa", "couch"];

/// Footprint and height for each known category, in meters.
pub fn category_extents(category: &str) -> Vec3 {
    match category {
        "chair" => vec3(0.5, 0.5, 0.45),
        "stool" => vec3(0.4, 0.4, 0.45),
        "bench" => vec3(1.2, 0.4, 0.45),
        "sofa" => vec3(1.8, 0.85, 0.45),
        "couch" => vec3(1.6, 0.8, 0.42),
        "bed" => vec3(2.0, 1.5, 0.55),
        "table" => vec3(1.2, 0.7, 0.75),
        "lamp" => vec3(0.3, 0.3, 1.5),
        "shelf" => vec3(0.8, 0.3, 1.8),
        _ => vec3(0.6, 0.6, 0.5),
    }
}

fn affords(category: &str, posture: Posture) -> bool {
    match posture {
        Posture::Sitting => SITTING_AFFORDANCE.contains(&category),
        Posture::Lying => LYING_AFFORDANCE.contains(&category),
        Posture::Standing => false,
    }
}

/// The four room walls as boxes just outside the floor rectangle.
pub fn wall_boxes(room: &Room) -> [Obb; 4] {
    let (w, d, h) = (room.width, room.depth, room.height);
    let t = WALL_THICKNESS * 0.5;
    let z = h * 0.5;
    let upright = |x: f64, y: f64| Iso3::new(vec3(x, y, z), Quat::IDENTITY);
    [
        Obb::new(upright(-t, d * 0.5), vec3(t, d * 0.5 + t, h * 0.5)),
        Obb::new(upright(w + t, d * 0.5), vec3(t, d * 0.5 + t, h * 0.5)),
        Obb::new(upright(w * 0.5, -t), vec3(w * 0.5 + t, t, h * 0.5)),
        Obb::new(upright(w * 0.5, d + t), vec3(w * 0.5 + t, t, h * 0.5)),
    ]
}

fn inside_room(obb: &Obb, room: &Room) -> bool {
    obb.corners().iter().all(|c| {
        c.x >= 0.0 && c.x <= room.width && c.y >= 0.0 && c.y <= room.depth && c.z >= -1e-9
    })
}

/// Free corridor in front of a seat: `ACCESS_MARGIN` deep, as wide as the
/// seat, spanning the height band a robot base sweeps.
fn access_box(center: Vec3, yaw: f64, extents: Vec3) -> Obb {
    let forward = Quat::rot_z(yaw).rotate(Vec3::X);
    let mid = center + forward * (extents.x * 0.5 + ACCESS_MARGIN * 0.5);
    Obb::new(
        Iso3::new(vec3(mid.x, mid.y, 0.25), Quat::rot_z(yaw)),
        vec3(ACCESS_MARGIN * 0.5, extents.y * 0.5, 0.25),
    )
}

/// Checks bounds, id uniqueness, axis and extent invariants, and pairwise
/// separation at 1 mm tolerance; the overlap pass uses the separating-axis
/// test rather than the sampler's distance query.
pub fn validate_layout(layout: &SceneLayout) -> Result<(), SceneError> {
    for f in &layout.furniture {
        if (f.forward_axis.norm() - 1.0).abs() > 1e-9 {
            return Err(SceneError::MalformedResponse(format!(
                "furniture {} forward_axis is not unit",
                f.id
            )));
        }
        if let FurnitureGeometry::Box { extents } = &f.geometry {
            if !(extents.x > 0.0 && extents.y > 0.0 && extents.z > 0.0) {
                return Err(SceneError::MalformedResponse(format!(
                    "furniture {} has non-positive extents",
                    f.id
                )));
            }
        }
        if let Some(obb) = f.obb() {
            if !inside_room(&obb, &layout.room) {
                return Err(SceneError::MalformedResponse(format!(
                    "furniture {} leaves the room bounds",
                    f.id
                )));
            }
        }
    }
    for (i, a) in layout.furniture.iter().enumerate() {
        for b in &layout.furniture[i + 1..] {
            if a.id == b.id {
                return Err(SceneError::MalformedResponse(format!(
                    "duplicate furniture id {}",
                    a.id
                )));
            }
            if let (Some(oa), Some(ob)) = (a.obb(), b.obb()) {
                if obb_obb_overlap(&oa, &ob) && obb_obb_distance(&oa, &ob) < -1e-3 {
                    return Err(SceneError::LayoutInfeasible(format!(
                        "{} overlaps {}",
                        a.id, b.id
                    )));
                }
            }
        }
    }
    Ok(())
}

pub fn parse_layout_json(text: &str) -> Result<SceneLayout, SceneError> {
    let layout: SceneLayout = serde_json::from_str(text)
        .map_err(|e| SceneError::MalformedResponse(e.to_string()))?;
    validate_layout(&layout)?;
    Ok(layout)
}

const CARDINAL_YAWS: [f64; 4] = [0.0, PI * 0.5, PI, -PI * 0.5];

/// Procedural room and furniture sampler. Draws room dimensions uniformly
/// from [3.5, 6] m, then resamples whole arrangements (required furniture
/// plus distractors, cardinal yaws) until every pair is separated and every
/// seat keeps a free access corridor.
pub fn sample_layout(spec: &ScenarioSpec, seed: u64) -> Result<SceneLayout, SceneError> {
    let mut rng = SplitMix64::new(seed);
    let room = Room {
        width: rng.uniform(3.5, 6.0),
        depth: rng.uniform(3.5, 6.0),
        height: ROOM_HEIGHT,
        kind: spec.room_type.clone(),
    };

    let mut categories: Vec<String> = spec.required_furniture.clone();
    let distractor_pool = ["lamp", "shelf"];
    let n_distractors = 1 + (rng.next_u64() % 2) as usize;
    for i in 0..n_distractors {
        categories.push(distractor_pool[(rng.next_u64() as usize + i) % distractor_pool.len()].to_string());
    }

    for _attempt in 0..200 {
        let mut furniture: Vec<FurnitureEntry> = Vec::with_capacity(categories.len());
        let mut ok = true;
        for (i, category) in categories.iter().enumerate() {
            let extents = category_extents(category);
            let margin = 0.5 * extents.x.max(extents.y) + 0.05;
            let x = rng.uniform(margin, room.width - margin);
            let y = rng.uniform(margin, room.depth - margin);
            let yaw = CARDINAL_YAWS[(rng.next_u64() % 4) as usize];
            furniture.push(FurnitureEntry {
                id: format!("{category}_{i}"),
                category: category.clone(),
                geometry: FurnitureGeometry::Box { extents },
                pose: FurniturePose {
                    position: vec3(x, y, extents.z * 0.5),
                    yaw,
                },
                forward_axis: Vec3::X,
            });
        }
        'validate: for (i, a) in furniture.iter().enumerate() {
            let oa = a.obb().expect("sampler emits boxes");
            if !inside_room(&oa, &room) {
                ok = false;
                break;
            }
            for b in &furniture[i + 1..] {
                if obb_obb_distance(&oa, &b.obb().expect("sampler emits boxes")) < 0.01 {
                    ok = false;
                    break 'validate;
                }
            }
            if affords(&a.category, Posture::Sitting) {
                let access = access_box(a.pose.position, a.pose.yaw, category_extents(&a.category));
                if !inside_room(&access, &room) {
                    ok = false;
                    break;
                }
                for b in &furniture {
                    if b.id != a.id && obb_obb_overlap(&access, &b.obb().expect("sampler emits boxes")) {
                        ok = false;
                        break 'validate;
                    }
                }
            }
        }
        if ok {
            let layout = SceneLayout {
                room,
                furniture,
                provenance: Provenance::Procedural,
            };
            validate_layout(&layout)?;
            return Ok(layout);
        }
    }
    Err(SceneError::LayoutInfeasible(
        "200 arrangement attempts exhausted".to_string(),
    ))
}

/// A sentinel entry meaning "stand on the floor": a zero-height box over
/// the whole room.
pub fn floor_sentinel(room: &Room) -> FurnitureEntry {
    FurnitureEntry {
        id: "floor".to_string(),
        category: "floor".to_string(),
        geometry: FurnitureGeometry::Box {
            extents: vec3(room.width, room.depth, 0.001),
        },
        pose: FurniturePose {
            position: vec3(room.width * 0.5, room.depth * 0.5, 0.0005),
            yaw: 0.0,
        },
        forward_axis: Vec3::X,
    }
}

/// First entry in layout order whose category affords the posture.
pub fn select_affordance_furniture(
    layout: &SceneLayout,
    posture: Posture,
) -> Result<FurnitureEntry, SceneError> {
    if posture == Posture::Standing {
        return Ok(floor_sentinel(&layout.room));
    }
    layout
        .furniture
        .iter()
        .find(|f| affords(&f.category, posture))
        .cloned()
        .ok_or(SceneError::NoAffordance(posture.as_str()))
}

/// Inserts a posture-consistent asset (a box chair) at the free grid cell
/// nearest the room center, trying cardinal yaws in a fixed order; each
/// candidate must clear all furniture and keep a free access corridor.
pub fn complete_scene(layout: &SceneLayout, _seed: u64) -> Result<SceneLayout, SceneError> {
    let extents = category_extents("chair");
    let room = &layout.room;
    let obstacles = layout.obstacle_boxes(None);

    let nx = (room.width / COMPLETION_GRID) as usize;
    let ny = (room.depth / COMPLETION_GRID) as usize;
    let mut cells: Vec<(f64, usize)> = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let x = (ix as f64 + 0.5) * COMPLETION_GRID;
            let y = (iy as f64 + 0.5) * COMPLETION_GRID;
            let dx = x - room.width * 0.5;
            let dy = y - room.depth * 0.5;
            cells.push((dx * dx + dy * dy, iy * nx + ix));
        }
    }
    cells.sort_by(|a, b| a.partial_cmp(b).expect("grid metrics are finite"));

    for (_, idx) in cells {
        let x = ((idx % nx) as f64 + 0.5) * COMPLETION_GRID;
        let y = ((idx / nx) as f64 + 0.5) * COMPLETION_GRID;
        let center = vec3(x, y, extents.z * 0.5);
        for yaw in CARDINAL_YAWS {
            let obb = Obb::new(
                Iso3::new(vec3(x, y, extents.z * 0.5), Quat::rot_z(yaw)),
                extents * 0.5,
            );
            if !inside_room(&obb, room) {
                continue;
            }
            if obstacles.iter().any(|o| obb_obb_distance(&obb, o) < 1e-3) {
                continue;
            }
            let access = access_box(center, yaw, extents);
            if !inside_room(&access, room) {
                continue;
            }
            if obstacles.iter().any(|o| obb_obb_overlap(&access, o)) {
                continue;
            }
            let mut out = layout.clone();
            let serial = out.furniture.len();
            out.furniture.push(FurnitureEntry {
                id: format!("completion_chair_{serial}"),
                category: "chair".to_string(),
                geometry: FurnitureGeometry::Box { extents },
                pose: FurniturePose {
                    position: center,
                    yaw,
                },
                forward_axis: Vec3::X,
            });
            out.provenance = Provenance::CompletionAugmented;
            validate_layout(&out)?;
            return Ok(out);
        }
    }
    Err(SceneError::NoFreeSpace)
}

/// Anchor over explicit world-frame vertices: restrict to the band within
/// `ANCHOR_BAND` of the maximal forward projection, then take the highest
/// vertex, ties broken by lowest index.
pub fn anchor_from_vertices(vertices: &[Vec3], forward_world: Vec3) -> Result<Vec3, SceneError> {
    if vertices.is_empty() {
        return Err(SceneError::EmptyMesh);
    }
    let f = forward_world.normalized();
    let max_proj = vertices
        .iter()
        .map(|v| v.dot(f))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<Vec3> = None;
    let mut best_z = f64::NEG_INFINITY;
    for v in vertices {
        if v.dot(f) >= max_proj - ANCHOR_BAND && v.z > best_z {
            best_z = v.z;
            best = Some(*v);
        }
    }
    Ok(best.expect("band always holds the extremal vertex"))
}

/// Seat anchor of a furniture entry: box geometry uses the box corners in
/// their fixed enumeration order; mesh geometry needs the loaded mesh.
pub fn compute_seat_anchor(
    entry: &FurnitureEntry,
    mesh: Option<&crate::mesh::TriMesh>,
) -> Result<Vec3, SceneError> {
    let forward = entry.forward_world();
    match (&entry.geometry, mesh) {
        (FurnitureGeometry::Box { .. }, _) => {
            let corners = entry.obb().expect("box geometry").corners();
            anchor_from_vertices(&corners, forward)
        }
        (FurnitureGeometry::MeshFile { .. }, Some(m)) => {
            let world = m.transformed(&entry.iso());
            anchor_from_vertices(&world.vertices, forward)
        }
        (FurnitureGeometry::MeshFile { .. }, None) => Err(SceneError::EmptyMesh),
    }
}

/// Joint angles for sitting upright: thighs forward, shins down, left arm
/// straight ahead so the forearm is presented to the robot.
pub fn seated_theta() -> [f64; 27] {
    let mut theta = [0.0; 27];
    let set = |theta: &mut [f64; 27], joint: usize, v: [f64; 3]| {
        theta[joint * 3] = v[0];
        theta[joint * 3 + 1] = v[1];
        theta[joint * 3 + 2] = v[2];
    };
    set(&mut theta, crate::body::JOINT_LEFT_SHOULDER, [0.0, -PI * 0.5, 0.0]);
    set(&mut theta, crate::body::JOINT_LEFT_HIP, [0.0, -PI * 0.5, 0.0]);
    set(&mut theta, crate::body::JOINT_RIGHT_HIP, [0.0, -PI * 0.5, 0.0]);
    set(&mut theta, crate::body::JOINT_LEFT_KNEE, [0.0, PI * 0.5, 0.0]);
    set(&mut theta, crate::body::JOINT_RIGHT_KNEE, [0.0, PI * 0.5, 0.0]);
    theta
}

#[derive(Clone, Debug)]
pub struct HumanPlacement {
    pub posed: PosedHuman,
    pub root_pos: Vec3,
    pub root_yaw: f64,
    pub anchor: Vec3,
    pub support_id: String,
    /// Gap between the lowest contact-region vertex and the anchor height.
    pub seat_gap: f64,
}

/// Vertices of the posed mesh that belong to the pelvis/thigh contact
/// region.
fn contact_region_vertices(posed: &PosedHuman) -> Vec<Vec3> {
    let region = [
        part_index("torso").expect("fixed label"),
        part_index("left_thigh").expect("fixed label"),
        part_index("right_thigh").expect("fixed label"),
    ];
    let mut used = vec![false; posed.mesh.vertices.len()];
    for (tri, part) in posed.mesh.triangles.iter().zip(&posed.tri_part) {
        if region.contains(&(*part as usize)) {
            for &v in tri {
                used[v as usize] = true;
            }
        }
    }
    posed
        .mesh
        .vertices
        .iter()
        .zip(&used)
        .filter(|(_, u)| **u)
        .map(|(v, _)| *v)
        .collect()
}

/// Seats the human on the support entry: yaw follows the furniture forward
/// axis, the pelvis sits over the anchor, and the body drops until the
/// contact region rests 2 mm above the anchor height. The result is
/// rejected if the body penetrates the seat deeper than 5 mm or touches
/// walls or other furniture.
pub fn place_human(
    layout: &SceneLayout,
    entry: &FurnitureEntry,
    human: &HumanModel,
    theta: &[f64; 27],
    anchor: Vec3,
) -> Result<HumanPlacement, SceneError> {
    let forward = entry.forward_world();
    let yaw = atan2(forward.y, forward.x);

    let pose_at = |z: f64| {
        let root = Iso3::new(vec3(anchor.x, anchor.y, z), Quat::rot_z(yaw));
        crate::body::pose_human(human, theta, root)
            .map_err(|e| SceneError::MalformedResponse(format!("invalid seated pose: {e}")))
    };
    let trial = pose_at(0.0)?;
    let region = contact_region_vertices(&trial);
    let min_z = region
        .iter()
        .map(|v| v.z)
        .fold(f64::INFINITY, f64::min);
    let gap = 0.002;
    let root_z = anchor.z - min_z + gap;
    let posed = pose_at(root_z)?;

    if let Some(seat) = entry.obb() {
        let (_, dist) = collide(&[Shape::Mesh(&posed.mesh)], &[Shape::Box(seat)]);
        if dist < -SEAT_TOLERANCE {
            return Err(SceneError::PlacementCollision(format!(
                "body sinks {:.1} mm into the seat",
                -dist * 1e3
            )));
        }
    }

    let body: Vec<Shape> = posed
        .world_capsules
        .iter()
        .map(|c| Shape::Capsule(*c))
        .collect();
    let mut others: Vec<Shape> = Vec::new();
    let obstacle_boxes = layout.obstacle_boxes(Some(entry.id.as_str()));
    for obb in &obstacle_boxes {
        others.push(Shape::Box(*obb));
    }
    let walls = wall_boxes(&layout.room);
    for w in &walls {
        others.push(Shape::Box(*w));
    }
    let (hit, dist) = collide(&body, &others);
    if hit {
        return Err(SceneError::PlacementCollision(format!(
            "body penetrates furniture or walls by {:.1} mm",
            -dist * 1e3
        )));
    }

    Ok(HumanPlacement {
        root_pos: vec3(anchor.x, anchor.y, root_z),
        root_yaw: yaw,
        anchor,
        support_id: entry.id.clone(),
        seat_gap: {
            let seated_region = contact_region_vertices(&posed);
            seated_region
                .iter()
                .map(|v| v.z)
                .fold(f64::INFINITY, f64::min)
                - anchor.z
        },
        posed,
    })
}

/// Camera mount point in the robot base frame.
pub const CAMERA_LOCAL_POS: Vec3 = vec3(-0.05, 0.0, 1.40);

#[derive(Clone, Debug, Serialize)]
pub struct RandomizationRecord {
    pub base_offset: [f64; 3],
    pub camera_pos_offset: [f64; 3],
    pub camera_rot_offset: [f64; 3],
    pub arm_offsets: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RobotPlacement {
    /// Base pose the placement program evaluated to, before randomization.
    pub nominal: BasePlacement,
    pub base: BasePlacement,
    /// Full joint vector: base x, y, yaw, then the articulated joints.
    pub q: Vec<f64>,
    pub camera: Iso3,
    pub randomization: RandomizationRecord,
    pub attempts: usize,
}

/// Evaluates the base-placement program against the seated human, then
/// randomizes base pose, camera pose, and arm joints, resampling up to 20
/// times until the robot is collision-free against the scene and human.
/// Draw order per attempt: base dx, dy, dyaw; camera dx, dy, dz; camera
/// rx, ry, rz; arm joints in link order.
pub fn place_robot(
    posed: &PosedHuman,
    program: &MotionProgram,
    model: &RobotModel,
    layout: &SceneLayout,
    randomization_seed: u64,
) -> Result<RobotPlacement, SceneError> {
    let empty_cloud: [Vec3; 0] = [];
    let empty_normals: [Vec3; 0] = [];
    let ctx = GroundingContext::new(posed, &empty_cloud, &empty_normals, Iso3::IDENTITY);
    let nominal = match eval_program(program, &ctx, randomization_seed) {
        Ok(EvalOutput::Base(b)) => b,
        Ok(_) => {
            return Err(SceneError::MalformedResponse(
                "expected a base-placement program".to_string(),
            ))
        }
        Err(e) => {
            return Err(SceneError::MalformedResponse(format!(
                "placement program failed: {e}"
            )))
        }
    };

    let human_shapes: Vec<Shape> = posed
        .world_capsules
        .iter()
        .map(|c| Shape::Capsule(*c))
        .collect();
    let mut scene_shapes: Vec<Shape> = Vec::new();
    let obstacle_boxes = layout.obstacle_boxes(None);
    for obb in &obstacle_boxes {
        scene_shapes.push(Shape::Box(*obb));
    }
    let walls = wall_boxes(&layout.room);
    for w in &walls {
        scene_shapes.push(Shape::Box(*w));
    }

    let deg = PI / 180.0;
    let mut rng = SplitMix64::new(randomization_seed);
    let arm_dofs: Vec<usize> = model
        .dofs
        .iter()
        .enumerate()
        .filter(|(_, d)| !matches!(d.kind, DofKind::BaseX | DofKind::BaseY | DofKind::BaseYaw))
        .map(|(i, _)| i)
        .collect();

    for attempt in 0..20 {
        let base_offset = [
            rng.uniform(-0.10, 0.10),
            rng.uniform(-0.10, 0.10),
            rng.uniform(-10.0 * deg, 10.0 * deg),
        ];
        let camera_pos_offset = [
            rng.uniform(-0.02, 0.02),
            rng.uniform(-0.02, 0.02),
            rng.uniform(-0.02, 0.02),
        ];
        let camera_rot_offset = [
            rng.uniform(-3.0 * deg, 3.0 * deg),
            rng.uniform(-3.0 * deg, 3.0 * deg),
            rng.uniform(-3.0 * deg, 3.0 * deg),
        ];
        let mut arm_offsets = Vec::with_capacity(arm_dofs.len());
        let mut q = vec![0.0; model.nq()];
        q[0] = nominal.x + base_offset[0];
        q[1] = nominal.y + base_offset[1];
        q[2] = wrap_angle(nominal.yaw + base_offset[2]);
        for &i in &arm_dofs {
            let dof = &model.dofs[i];
            let span = dof.limits[1] - dof.limits[0];
            let offset = rng.uniform(-0.1 * span, 0.1 * span);
            arm_offsets.push(offset);
            q[i] = (model.home[i] + offset).clamp(dof.limits[0], dof.limits[1]);
        }

        let robot_shapes: Vec<Shape> = robot_capsules(model, &q)
            .iter()
            .map(|(_, c)| Shape::Capsule(*c))
            .collect();
        let (hit_scene, _) = collide(&robot_shapes, &scene_shapes);
        let (hit_human, _) = collide(&robot_shapes, &human_shapes);
        if hit_scene || hit_human {
            continue;
        }

        let base_iso = Iso3::planar(q[0], q[1], q[2]);
        let cam_pos = base_iso.transform_point(
            CAMERA_LOCAL_POS
                + vec3(camera_pos_offset[0], camera_pos_offset[1], camera_pos_offset[2]),
        );
        let joints = posed.world_joint_positions();
        let elbow = joints["left_elbow"];
        let wrist = joints["left_wrist"];
        let aim = (elbow + wrist) * 0.5;
        let look = crate::math::look_rotation(aim - cam_pos, Vec3::Z);
        let jitter = Quat::rot_x(camera_rot_offset[0])
            * Quat::rot_y(camera_rot_offset[1])
            * Quat::rot_z(camera_rot_offset[2]);
        let camera = Iso3::new(cam_pos, look * jitter);

        return Ok(RobotPlacement {
            nominal,
            base: BasePlacement {
                x: q[0],
                y: q[1],
                yaw: q[2],
            },
            q,
            camera,
            randomization: RandomizationRecord {
                base_offset,
                camera_pos_offset,
                camera_rot_offset,
                arm_offsets,
            },
            attempts: attempt + 1,
        });
    }
    Err(SceneError::RobotPlacementFailed(20))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::build_human;
    use crate::motion::parse_program;
    use crate::scenario::sample_scenario;

    fn test_spec() -> ScenarioSpec {
        sample_scenario("please scratch my left forearm", 7)
    }

    fn open_room_layout(w: f64, d: f64) -> SceneLayout {
        SceneLayout {
            room: Room {
                width: w,
                depth: d,
                height: ROOM_HEIGHT,
                kind: "living_room".to_string(),
            },
            furniture: Vec::new(),
            provenance: Provenance::Procedural,
        }
    }

    fn box_chair_at(x: f64, y: f64, yaw: f64) -> FurnitureEntry {
        FurnitureEntry {
            id: "chair_0".to_string(),
            category: "chair".to_string(),
            geometry: FurnitureGeometry::Box {
                extents: vec3(0.5, 0.5, 0.45),
            },
            pose: FurniturePose {
                position: vec3(x, y, 0.225),
                yaw,
            },
            forward_axis: Vec3::X,
        }
    }

    #[test]
    fn sampled_layout_contains_required_furniture_and_validates() {
        let mut spec = test_spec();
        spec.required_furniture = vec!["couch".to_string(), "table".to_string()];
        let layout = sample_layout(&spec, 42).unwrap();
        assert!(layout.furniture.iter().any(|f| f.category == "couch"));
        assert!(layout.furniture.iter().any(|f| f.category == "table"));
        assert!(layout.room.width >= 3.5 && layout.room.width <= 6.0);
        validate_layout(&layout).unwrap();
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let spec = test_spec();
        let a = sample_layout(&spec, 9).unwrap().to_json();
        let b = sample_layout(&spec, 9).unwrap().to_json();
        assert_eq!(a, b);
        let c = sample_layout(&spec, 10).unwrap().to_json();
        assert_ne!(a, c);
    }

    #[test]
    fn validation_reports_the_overlapping_pair() {
        let mut layout = open_room_layout(4.0, 4.0);
        layout.furniture.push(box_chair_at(2.0, 2.0, 0.0));
        let mut second = box_chair_at(2.1, 2.0, 0.0);
        second.id = "chair_1".to_string();
        layout.furniture.push(second);
        let err = validate_layout(&layout).unwrap_err();
        assert_eq!(err.code(), "layout_infeasible");
        let msg = format!("{err}");
        assert!(msg.contains("chair_0") && msg.contains("chair_1"), "{msg}");
    }

    #[test]
    fn affordance_selection_prefers_layout_order_and_posture_table() {
        let mut layout = open_room_layout(5.0, 5.0);
        let mut table = box_chair_at(1.0, 1.0, 0.0);
        table.id = "table_0".to_string();
        table.category = "table".to_string();
        layout.furniture.push(table);
        layout.furniture.push(box_chair_at(3.0, 3.0, 0.0));

        let seat = select_affordance_furniture(&layout, Posture::Sitting).unwrap();
        assert_eq!(seat.id, "chair_0");

        layout.furniture.retain(|f| f.category == "table");
        let err = select_affordance_furniture(&layout, Posture::Sitting).unwrap_err();
        assert_eq!(err.code(), "no_affordance");

        let floor = select_affordance_furniture(&layout, Posture::Standing).unwrap();
        assert_eq!(floor.id, "floor");
    }

    #[test]
    fn completion_inserts_a_reachable_chair_in_an_empty_room() {
        let layout = open_room_layout(4.0, 4.0);
        let done = complete_scene(&layout, 3).unwrap();
        assert_eq!(done.provenance, Provenance::CompletionAugmented);
        let chair = done
            .furniture
            .iter()
            .find(|f| f.category == "chair")
            .expect("chair inserted");
        let obb = chair.obb().unwrap();
        assert!(inside_room(&obb, &done.room));

        // Exhaustive clearance check: every 5 cm probe point of the access
        // corridor stays inside the room and clear of all other furniture.
        let access = access_box(
            chair.pose.position,
            chair.pose.yaw,
            category_extents("chair"),
        );
        let others = layout.obstacle_boxes(None);
        let mut k = 0.0;
        while k <= 1.0 {
            let mut j = 0.0;
            while j <= 1.0 {
                let local = vec3(
                    (k - 0.5) * ACCESS_MARGIN,
                    (j - 0.5) * 0.5,
                    0.1,
                );
                let p = access.pose.transform_point(local);
                assert!(p.x >= 0.0 && p.x <= done.room.width);
                assert!(p.y >= 0.0 && p.y <= done.room.depth);
                assert!(others.iter().all(|o| o.signed_distance(p) > 0.0));
                j += 0.1;
            }
            k += 0.1;
        }

        let again = complete_scene(&layout, 3).unwrap();
        assert_eq!(done.to_json(), again.to_json());
    }

    #[test]
    fn saturated_room_has_no_free_space() {
        let mut layout = open_room_layout(3.5, 3.5);
        let mut i = 0;
        let mut x = 0.65;
        while x < 3.5 {
            let mut y = 0.45;
            while y < 3.5 {
                layout.furniture.push(FurnitureEntry {
                    id: format!("table_{i}"),
                    category: "table".to_string(),
                    geometry: FurnitureGeometry::Box {
                        extents: vec3(1.2, 0.7, 0.75),
                    },
                    pose: FurniturePose {
                        position: vec3(x, y, 0.375),
                        yaw: 0.0,
                    },
                    forward_axis: Vec3::X,
                });
                i += 1;
                y += 0.75;
            }
            x += 1.25;
        }
        let err = complete_scene(&layout, 0).unwrap_err();
        assert_eq!(err.code(), "no_free_space");
    }

    #[test]
    fn box_chair_anchor_lands_on_the_front_top_corner() {
        let chair = box_chair_at(0.0, 0.0, 0.0);
        let anchor = compute_seat_anchor(&chair, None).unwrap();
        assert!(anchor.distance(vec3(0.25, -0.25, 0.45)) < 1e-12);

        let rotated = box_chair_at(0.0, 0.0, PI * 0.5);
        let anchor_rot = compute_seat_anchor(&rotated, None).unwrap();
        let expected = Quat::rot_z(PI * 0.5).rotate(vec3(0.25, -0.25, 0.0)) + vec3(0.0, 0.0, 0.45);
        assert!(anchor_rot.distance(expected) < 1e-12, "{anchor_rot:?}");
    }

    #[test]
    fn anchor_commutes_with_rigid_transforms() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..200 {
            let x = rng.uniform(-3.0, 3.0);
            let y = rng.uniform(-3.0, 3.0);
            let yaw = rng.uniform(-PI, PI);
            let base = box_chair_at(0.0, 0.0, 0.0);
            let anchor0 = compute_seat_anchor(&base, None).unwrap();

            let moved = box_chair_at(x, y, yaw);
            let anchor1 = compute_seat_anchor(&moved, None).unwrap();
            let expected = Iso3::planar(x, y, yaw).transform_point(anchor0 - vec3(0.0, 0.0, 0.225))
                + vec3(0.0, 0.0, 0.225);
            assert!(anchor1.distance(expected) < 1e-9);
        }
    }

    #[test]
    fn empty_vertex_list_is_rejected() {
        let err = anchor_from_vertices(&[], Vec3::X).unwrap_err();
        assert_eq!(err.code(), "empty_mesh");
    }

    #[test]
    fn seated_human_rests_on_the_anchor_within_tolerance() {
        let human = build_human(&Default::default()).unwrap();
        let mut layout = open_room_layout(5.0, 5.0);
        let chair = box_chair_at(2.5, 2.5, 0.0);
        layout.furniture.push(chair.clone());
        let anchor = compute_seat_anchor(&chair, None).unwrap();
        let placed = place_human(&layout, &chair, &human, &seated_theta(), anchor).unwrap();
        assert!(
            placed.seat_gap >= 0.0 && placed.seat_gap <= 0.005,
            "gap {}",
            placed.seat_gap
        );
        assert!((placed.root_pos.x - anchor.x).abs() < 1e-12);
        assert!((placed.root_pos.y - anchor.y).abs() < 1e-12);
        assert!((placed.root_yaw - 0.0).abs() < 1e-12);

        let again = place_human(&layout, &chair, &human, &seated_theta(), anchor).unwrap();
        assert_eq!(placed.root_pos, again.root_pos);
    }

    #[test]
    fn facing_a_close_wall_is_a_placement_collision() {
        let human = build_human(&Default::default()).unwrap();
        let mut layout = open_room_layout(5.0, 5.0);
        // Forward axis +x with the front edge 0.25 m from the x=0 wall:
        // the chair faces the wall at well under 0.3 m.
        let chair = box_chair_at(0.5, 2.5, PI);
        layout.furniture.push(chair.clone());
        let anchor = compute_seat_anchor(&chair, None).unwrap();
        let err = place_human(&layout, &chair, &human, &seated_theta(), anchor).unwrap_err();
        assert_eq!(err.code(), "placement_collision");
    }

    fn seated_fixture() -> (SceneLayout, HumanPlacement) {
        let human = build_human(&Default::default()).unwrap();
        let mut layout = open_room_layout(6.0, 6.0);
        let chair = box_chair_at(2.0, 3.0, 0.0);
        layout.furniture.push(chair.clone());
        let anchor = compute_seat_anchor(&chair, None).unwrap();
        let placed = place_human(&layout, &chair, &human, &seated_theta(), anchor).unwrap();
        (layout, placed)
    }

    #[test]
    fn robot_placement_matches_the_hand_evaluated_program() {
        let (layout, placed) = seated_fixture();
        let model = RobotModel::from_json(crate::robot::bundled_stretch_like()).unwrap();
        let (_, source) = crate::motion::reference_programs()
            .into_iter()
            .find(|(name, _)| *name == "place_left")
            .unwrap();
        let program = parse_program(source).unwrap();
        let placement =
            place_robot(&placed.posed, &program, &model, &layout, 11).unwrap();

        // The pelvis sits over the chair's front-top corner (2.25, 2.75).
        // Facing +x with the left arm forward: elbow at pelvis + (0.28,
        // 0.185), wrist + (0.54, 0.185); the forearm midpoint shifted 0.7
        // along the left normal of elbow->wrist gives pelvis + (0.41,
        // 0.885), facing -y.
        assert!(placed.root_pos.distance(vec3(2.25, 2.75, placed.root_pos.z)) < 1e-12);
        assert!((placement.nominal.x - (2.25 + 0.41)).abs() < 1e-9);
        assert!((placement.nominal.y - (2.75 + 0.885)).abs() < 1e-9);
        assert!((placement.nominal.yaw + PI * 0.5).abs() < 1e-9);

        assert!((placement.base.x - placement.nominal.x).abs() <= 0.10 + 1e-12);
        assert!((placement.base.y - placement.nominal.y).abs() <= 0.10 + 1e-12);

        let again = place_robot(&placed.posed, &program, &model, &layout, 11).unwrap();
        assert_eq!(
            serde_json::to_string(&placement).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
        let other = place_robot(&placed.posed, &program, &model, &layout, 12).unwrap();
        assert_ne!(
            serde_json::to_string(&placement).unwrap(),
            serde_json::to_string(&other).unwrap()
        );
    }

    #[test]
    fn camera_aims_at_the_left_forearm() {
        let (layout, placed) = seated_fixture();
        let model = RobotModel::from_json(crate::robot::bundled_stretch_like()).unwrap();
        let (_, source) = crate::motion::reference_programs()
            .into_iter()
            .find(|(name, _)| *name == "place_left")
            .unwrap();
        let program = parse_program(source).unwrap();
        let placement = place_robot(&placed.posed, &program, &model, &layout, 2).unwrap();

        let joints = placed.posed.world_joint_positions();
        let aim = (joints["left_elbow"] + joints["left_wrist"]) * 0.5;
        let dir = (aim - placement.camera.trans).normalized();
        let optical = placement.camera.rot.rotate(Vec3::Z);
        // Within the 3 degree-per-axis jitter cone.
        assert!(optical.dot(dir) > (6.0 * PI / 180.0).cos(), "{}", optical.dot(dir));
    }

    #[test]
    fn cornered_human_defeats_robot_placement() {
        let human = build_human(&Default::default()).unwrap();
        // Alcove: a room barely wider than the chair, so every randomized
        // base pose intersects a wall.
        let mut layout = open_room_layout(0.7, 6.0);
        let chair = box_chair_at(0.35, 3.0, PI * 0.5);
        layout.furniture.push(chair.clone());
        let anchor = compute_seat_anchor(&chair, None).unwrap();
        let placed = place_human(&layout, &chair, &human, &seated_theta(), anchor);
        let posed = match placed {
            Ok(p) => p.posed,
            Err(_) => {
                // Seating may already collide in the alcove; pose the human
                // directly to exercise the robot stage.
                let root = Iso3::new(vec3(0.35, 3.0, 0.6), Quat::rot_z(PI * 0.5));
                crate::body::pose_human(&human, &seated_theta(), root).unwrap()
            }
        };
        let model = RobotModel::from_json(crate::robot::bundled_stretch_like()).unwrap();
        let (_, source) = crate::motion::reference_programs()
            .into_iter()
            .find(|(name, _)| *name == "place_left")
            .unwrap();
        let program = parse_program(source).unwrap();
        let err = place_robot(&posed, &program, &model, &layout, 4).unwrap_err();
        assert_eq!(err.code(), "robot_placement_failed");
    }

    #[test]
    fn layout_json_round_trips() {
        let spec = test_spec();
        let layout = sample_layout(&spec, 77).unwrap();
        let text = layout.to_json();
        let back = parse_layout_json(&text).unwrap();
        assert_eq!(layout, back);
    }
}
