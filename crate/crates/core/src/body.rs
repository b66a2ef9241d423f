//! Articulated capsule human: 10 segments (capsules plus an ellipsoid head)
//! driven by 9 ball joints, 27 pose parameters total.
//!
//! Shape comes from `beta` through fixed multiplicative maps on a template
//! body; pose comes from `theta` as one axis-angle vector per ball joint.
//! The template, the scale maps, and the joint tree below are the single
//! source of truth for every consumer (meshes, collision proxies, URDF).
//!
//! Template (all meters, standing, +x forward, +z up, pelvis at the origin):
//! torso capsule 0.55 x r0.14 rising from the pelvis; head ellipsoid with
//! semi-axes (0.10, 0.08, 0.12) centered 0.15 above the neck; upper arm
//! 0.28 x r0.045; forearm 0.26 x r0.040; thigh 0.42 x r0.070; lower leg
//! 0.40 x r0.050. Shoulders at (0, +-0.185, 0.52), hips at (0, +-0.09, 0),
//! neck at (0, 0, 0.55). Arms hang straight down, legs straight down.
//!
//! Scale maps (each beta component contributes multiplicatively, clamped to
//! [-2, 2]):
//!   beta[0] height   h = 1 + 0.075 b  (every template length and offset)
//!   beta[1] limbs    l = 1 + 0.050 b  (arm and leg segment lengths)
//!   beta[2] girth    g = 1 + 0.100 b  (all radii, head x/y semi-axes)
//!   beta[3] torso    t = 1 + 0.050 b  (torso length, neck/shoulder height)
//!   beta[4] width    s = 1 + 0.080 b  (shoulder lateral offset)
//!   beta[5..10]      reserved, no effect

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{vec3, Iso3, Quat, Vec3, PI};
use crate::mesh::{tessellate_capsule, tessellate_ellipsoid, TriMesh};
use crate::shapes::Capsule;

pub const NUM_SEGMENTS: usize = 10;
pub const NUM_JOINTS: usize = 9;
pub const NUM_POSE_PARAMS: usize = 27;
pub const NUM_SHAPE_PARAMS: usize = 10;

/// Segment order is also the part-label index used in observations.
pub const PART_LABELS: [&str; NUM_SEGMENTS] = [
    "head",
    "torso",
    "left_upper_arm",
    "right_upper_arm",
    "left_forearm",
    "right_forearm",
    "left_thigh",
    "right_thigh",
    "left_lower_leg",
    "right_lower_leg",
];

pub const SEG_HEAD: usize = 0;
pub const SEG_TORSO: usize = 1;
pub const SEG_LEFT_UPPER_ARM: usize = 2;
pub const SEG_RIGHT_UPPER_ARM: usize = 3;
pub const SEG_LEFT_FOREARM: usize = 4;
pub const SEG_RIGHT_FOREARM: usize = 5;
pub const SEG_LEFT_THIGH: usize = 6;
pub const SEG_RIGHT_THIGH: usize = 7;
pub const SEG_LEFT_LOWER_LEG: usize = 8;
pub const SEG_RIGHT_LOWER_LEG: usize = 9;

pub fn part_index(label: &str) -> Option<usize> {
    PART_LABELS.iter().position(|&l| l == label)
}

/// Articulated joints in `theta` order.
pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "neck",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
];

pub const JOINT_NECK: usize = 0;
pub const JOINT_LEFT_SHOULDER: usize = 1;
pub const JOINT_RIGHT_SHOULDER: usize = 2;
pub const JOINT_LEFT_ELBOW: usize = 3;
pub const JOINT_RIGHT_ELBOW: usize = 4;
pub const JOINT_LEFT_HIP: usize = 5;
pub const JOINT_RIGHT_HIP: usize = 6;
pub const JOINT_LEFT_KNEE: usize = 7;
pub const JOINT_RIGHT_KNEE: usize = 8;

/// (parent segment, child segment) per joint.
const JOINT_TREE: [(usize, usize); NUM_JOINTS] = [
    (SEG_TORSO, SEG_HEAD),
    (SEG_TORSO, SEG_LEFT_UPPER_ARM),
    (SEG_TORSO, SEG_RIGHT_UPPER_ARM),
    (SEG_LEFT_UPPER_ARM, SEG_LEFT_FOREARM),
    (SEG_RIGHT_UPPER_ARM, SEG_RIGHT_FOREARM),
    (SEG_TORSO, SEG_LEFT_THIGH),
    (SEG_TORSO, SEG_RIGHT_THIGH),
    (SEG_LEFT_THIGH, SEG_LEFT_LOWER_LEG),
    (SEG_RIGHT_THIGH, SEG_RIGHT_LOWER_LEG),
];

/// Per-component [lo, hi] limits. Elbows and knees are single-bend joints:
/// the y component is the bend axis with range [0, 2.6] rad and the other
/// two components allow only small off-axis motion.
pub fn joint_limits(joint: usize) -> [[f64; 2]; 3] {
    match joint {
        JOINT_LEFT_ELBOW | JOINT_RIGHT_ELBOW | JOINT_LEFT_KNEE | JOINT_RIGHT_KNEE => {
            [[-0.3, 0.3], [0.0, 2.6], [-0.3, 0.3]]
        }
        _ => [[-PI, PI], [-PI, PI], [-PI, PI]],
    }
}

const _: () = assert!(NUM_JOINTS * 3 == NUM_POSE_PARAMS);
const _: () = assert!(JOINT_TREE.len() == NUM_JOINTS);

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BodyParams {
    pub beta: [f64; NUM_SHAPE_PARAMS],
    pub theta: [f64; NUM_POSE_PARAMS],
    pub root_pos: Vec3,
    pub root_yaw: f64,
    pub seed: u64,
}

impl Default for BodyParams {
    fn default() -> Self {
        BodyParams {
            beta: [0.0; NUM_SHAPE_PARAMS],
            theta: [0.0; NUM_POSE_PARAMS],
            root_pos: Vec3::ZERO,
            root_yaw: 0.0,
            seed: 0,
        }
    }
}

impl BodyParams {
    pub fn root_iso(&self) -> Iso3 {
        Iso3::new(self.root_pos, Quat::rot_z(self.root_yaw))
    }

    pub fn joint_theta(&self, joint: usize) -> Vec3 {
        vec3(
            self.theta[joint * 3],
            self.theta[joint * 3 + 1],
            self.theta[joint * 3 + 2],
        )
    }

    pub fn set_joint_theta(&mut self, joint: usize, v: Vec3) {
        self.theta[joint * 3] = v.x;
        self.theta[joint * 3 + 1] = v.y;
        self.theta[joint * 3 + 2] = v.z;
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BodyError {
    #[error("invalid body parameter: {0}")]
    InvalidParam(&'static str),
    #[error("unknown joint name: {0}")]
    UnknownJoint(String),
}

#[derive(Clone, Copy, Debug)]
pub struct SegmentDims {
    /// Capsule length for limbs/torso; unused for the head.
    pub length: f64,
    pub radius: f64,
}

/// Shape-resolved human, still unposed.
#[derive(Clone, Debug)]
pub struct HumanModel {
    pub params: BodyParams,
    pub dims: [SegmentDims; NUM_SEGMENTS],
    pub head_semi: Vec3,
    /// Head ellipsoid center above the neck joint.
    pub neck_offset: f64,
    /// Joint anchor translation in the parent segment frame.
    pub joint_offsets: [Vec3; NUM_JOINTS],
    /// Per-segment surface mesh in the segment's local frame.
    pub meshes: Vec<TriMesh>,
    /// Per-segment analytic collision capsule in the local frame.
    pub capsules: [Capsule; NUM_SEGMENTS],
}

fn finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

pub fn build_human(params: &BodyParams) -> Result<HumanModel, BodyError> {
    if !finite(&params.beta) {
        return Err(BodyError::InvalidParam("beta must be finite"));
    }
    if !finite(&params.theta) {
        return Err(BodyError::InvalidParam("theta must be finite"));
    }
    let mut p = *params;
    for b in &mut p.beta {
        *b = b.clamp(-2.0, 2.0);
    }

    let h = 1.0 + 0.075 * p.beta[0];
    let l = 1.0 + 0.050 * p.beta[1];
    let g = 1.0 + 0.100 * p.beta[2];
    let t = 1.0 + 0.050 * p.beta[3];
    let s = 1.0 + 0.080 * p.beta[4];

    let mut dims = [SegmentDims {
        length: 0.0,
        radius: 0.0,
    }; NUM_SEGMENTS];
    dims[SEG_TORSO] = SegmentDims {
        length: 0.55 * h * t,
        radius: 0.14 * g,
    };
    for seg in [SEG_LEFT_UPPER_ARM, SEG_RIGHT_UPPER_ARM] {
        dims[seg] = SegmentDims {
            length: 0.28 * h * l,
            radius: 0.045 * g,
        };
    }
    for seg in [SEG_LEFT_FOREARM, SEG_RIGHT_FOREARM] {
        dims[seg] = SegmentDims {
            length: 0.26 * h * l,
            radius: 0.040 * g,
        };
    }
    for seg in [SEG_LEFT_THIGH, SEG_RIGHT_THIGH] {
        dims[seg] = SegmentDims {
            length: 0.42 * h * l,
            radius: 0.070 * g,
        };
    }
    for seg in [SEG_LEFT_LOWER_LEG, SEG_RIGHT_LOWER_LEG] {
        dims[seg] = SegmentDims {
            length: 0.40 * h * l,
            radius: 0.050 * g,
        };
    }
    let head_semi = vec3(0.10 * g, 0.08 * g, 0.12 * h);
    let neck_offset = 0.15 * h;
    dims[SEG_HEAD] = SegmentDims {
        length: 0.0,
        radius: head_semi.x.max(head_semi.y),
    };

    let shoulder_y = 0.185 * h * s;
    let shoulder_z = 0.52 * h * t;
    let hip_y = 0.09 * h;
    let joint_offsets = [
        vec3(0.0, 0.0, dims[SEG_TORSO].length),
        vec3(0.0, shoulder_y, shoulder_z),
        vec3(0.0, -shoulder_y, shoulder_z),
        vec3(0.0, 0.0, -dims[SEG_LEFT_UPPER_ARM].length),
        vec3(0.0, 0.0, -dims[SEG_RIGHT_UPPER_ARM].length),
        vec3(0.0, hip_y, 0.0),
        vec3(0.0, -hip_y, 0.0),
        vec3(0.0, 0.0, -dims[SEG_LEFT_THIGH].length),
        vec3(0.0, 0.0, -dims[SEG_RIGHT_THIGH].length),
    ];

    let mut capsules = [Capsule::new(Vec3::ZERO, Vec3::ZERO, 0.0); NUM_SEGMENTS];
    capsules[SEG_TORSO] = Capsule::new(
        Vec3::ZERO,
        vec3(0.0, 0.0, dims[SEG_TORSO].length),
        dims[SEG_TORSO].radius,
    );
    for seg in [
        SEG_LEFT_UPPER_ARM,
        SEG_RIGHT_UPPER_ARM,
        SEG_LEFT_FOREARM,
        SEG_RIGHT_FOREARM,
        SEG_LEFT_THIGH,
        SEG_RIGHT_THIGH,
        SEG_LEFT_LOWER_LEG,
        SEG_RIGHT_LOWER_LEG,
    ] {
        capsules[seg] = Capsule::new(
            Vec3::ZERO,
            vec3(0.0, 0.0, -dims[seg].length),
            dims[seg].radius,
        );
    }
    // Head proxy: a capsule matching the ellipsoid's height and widest
    // horizontal semi-axis (slightly conservative against the y axis).
    let head_r = head_semi.x.max(head_semi.y);
    let head_half_axis = (head_semi.z - head_r).max(0.0);
    capsules[SEG_HEAD] = Capsule::new(
        vec3(0.0, 0.0, neck_offset - head_half_axis),
        vec3(0.0, 0.0, neck_offset + head_half_axis),
        head_r,
    );

    let mut meshes = Vec::with_capacity(NUM_SEGMENTS);
    for seg in 0..NUM_SEGMENTS {
        if seg == SEG_HEAD {
            meshes.push(
                tessellate_ellipsoid(head_semi)
                    .transformed(&Iso3::from_translation(vec3(0.0, 0.0, neck_offset))),
            );
        } else {
            meshes.push(tessellate_capsule(&capsules[seg]));
        }
    }

    Ok(HumanModel {
        params: p,
        dims,
        head_semi,
        neck_offset,
        joint_offsets,
        meshes,
        capsules,
    })
}

/// Posed human: world transform per segment plus baked world-space geometry.
#[derive(Clone, Debug)]
pub struct PosedHuman {
    pub model: HumanModel,
    /// Theta actually applied, after limit clamping.
    pub theta: [f64; NUM_POSE_PARAMS],
    /// Set when any component had to be clamped into its limit range.
    pub clamped: bool,
    pub root: Iso3,
    pub seg_world: [Iso3; NUM_SEGMENTS],
    /// All segments merged into one world-space mesh.
    pub mesh: TriMesh,
    /// Part label per triangle of `mesh`.
    pub tri_part: Vec<u8>,
    /// World-space collision capsule per segment.
    pub world_capsules: [Capsule; NUM_SEGMENTS],
}

/// Forward kinematics. `theta` components outside their joint limits are
/// clamped and reported through [`PosedHuman::clamped`].
pub fn pose_human(
    model: &HumanModel,
    theta: &[f64; NUM_POSE_PARAMS],
    root: Iso3,
) -> Result<PosedHuman, BodyError> {
    if !finite(theta) {
        return Err(BodyError::InvalidParam("theta must be finite"));
    }
    let mut applied = *theta;
    let mut clamped = false;
    for j in 0..NUM_JOINTS {
        let lim = joint_limits(j);
        for c in 0..3 {
            let v = applied[j * 3 + c];
            let w = v.clamp(lim[c][0], lim[c][1]);
            if w != v {
                clamped = true;
                applied[j * 3 + c] = w;
            }
        }
    }

    let mut seg_world = [Iso3::IDENTITY; NUM_SEGMENTS];
    seg_world[SEG_TORSO] = root;
    for (j, &(parent, child)) in JOINT_TREE.iter().enumerate() {
        let rot = Quat::from_rotvec(vec3(
            applied[j * 3],
            applied[j * 3 + 1],
            applied[j * 3 + 2],
        ));
        seg_world[child] = seg_world[parent]
            * Iso3::from_translation(model.joint_offsets[j])
            * Iso3::from_rotation(rot);
    }

    let mut mesh = TriMesh::default();
    let mut tri_part = Vec::new();
    for seg in 0..NUM_SEGMENTS {
        let world = model.meshes[seg].transformed(&seg_world[seg]);
        let range = mesh.append(&world);
        tri_part.extend(core::iter::repeat(seg as u8).take(range.len()));
    }
    let world_capsules =
        core::array::from_fn(|seg| model.capsules[seg].transformed(&seg_world[seg]));

    Ok(PosedHuman {
        model: model.clone(),
        theta: applied,
        clamped,
        root,
        seg_world,
        mesh,
        tri_part,
        world_capsules,
    })
}

/// Names accepted by [`joint_position`]: the 9 articulated joints plus the
/// unarticulated query points.
pub const QUERY_JOINTS: [&str; 15] = [
    "pelvis",
    "neck",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "head_top",
];

pub fn joint_position(posed: &PosedHuman, name: &str) -> Result<Vec3, BodyError> {
    let m = &posed.model;
    let (segment, local) = match name {
        "pelvis" => (SEG_TORSO, Vec3::ZERO),
        "neck" => (SEG_TORSO, m.joint_offsets[JOINT_NECK]),
        "left_shoulder" => (SEG_TORSO, m.joint_offsets[JOINT_LEFT_SHOULDER]),
        "right_shoulder" => (SEG_TORSO, m.joint_offsets[JOINT_RIGHT_SHOULDER]),
        "left_elbow" => (SEG_LEFT_UPPER_ARM, m.joint_offsets[JOINT_LEFT_ELBOW]),
        "right_elbow" => (SEG_RIGHT_UPPER_ARM, m.joint_offsets[JOINT_RIGHT_ELBOW]),
        "left_wrist" => (
            SEG_LEFT_FOREARM,
            vec3(0.0, 0.0, -m.dims[SEG_LEFT_FOREARM].length),
        ),
        "right_wrist" => (
            SEG_RIGHT_FOREARM,
            vec3(0.0, 0.0, -m.dims[SEG_RIGHT_FOREARM].length),
        ),
        "left_hip" => (SEG_TORSO, m.joint_offsets[JOINT_LEFT_HIP]),
        "right_hip" => (SEG_TORSO, m.joint_offsets[JOINT_RIGHT_HIP]),
        "left_knee" => (SEG_LEFT_THIGH, m.joint_offsets[JOINT_LEFT_KNEE]),
        "right_knee" => (SEG_RIGHT_THIGH, m.joint_offsets[JOINT_RIGHT_KNEE]),
        "left_ankle" => (
            SEG_LEFT_LOWER_LEG,
            vec3(0.0, 0.0, -m.dims[SEG_LEFT_LOWER_LEG].length),
        ),
        "right_ankle" => (
            SEG_RIGHT_LOWER_LEG,
            vec3(0.0, 0.0, -m.dims[SEG_RIGHT_LOWER_LEG].length),
        ),
        "head_top" => (SEG_HEAD, vec3(0.0, 0.0, m.neck_offset + m.head_semi.z)),
        other => return Err(BodyError::UnknownJoint(String::from(other))),
    };
    Ok(posed.seg_world[segment].transform_point(local))
}

/// URDF document for the model: each ball joint is factored into an x, y, z
/// revolute chain through two massless intermediate links, giving 28 links
/// and 27 revolute joints rooted at the torso.
pub fn export_urdf(model: &HumanModel) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\"?>\n<robot name=\"human\">\n");

    let link_inertial = "    <inertial>\n      <mass value=\"1.0\"/>\n      <inertia ixx=\"0.01\" ixy=\"0\" ixz=\"0\" iyy=\"0.01\" iyz=\"0\" izz=\"0.01\"/>\n    </inertial>\n";
    let push_segment_link = |out: &mut String, seg: usize| {
        out.push_str(&format!("  <link name=\"{}\">\n", PART_LABELS[seg]));
        out.push_str(link_inertial);
        out.push_str(&format!(
            "    <visual>\n      <geometry>\n        <mesh filename=\"meshes/{}.ply\"/>\n      </geometry>\n    </visual>\n",
            PART_LABELS[seg]
        ));
        out.push_str("  </link>\n");
    };

    push_segment_link(&mut out, SEG_TORSO);
    for (j, &(parent, child)) in JOINT_TREE.iter().enumerate() {
        let jn = JOINT_NAMES[j];
        let off = model.joint_offsets[j];
        let lim = joint_limits(j);
        let stages = [
            (format!("{jn}_x"), "1 0 0", lim[0]),
            (format!("{jn}_y"), "0 1 0", lim[1]),
            (format!("{jn}_z"), "0 0 1", lim[2]),
        ];
        let mut parent_link = String::from(PART_LABELS[parent]);
        for (k, (name, axis, limits)) in stages.iter().enumerate() {
            let child_link = if k == 2 {
                String::from(PART_LABELS[child])
            } else {
                format!("{jn}_i{}", ["x", "y"][k])
            };
            out.push_str(&format!("  <joint name=\"{name}\" type=\"revolute\">\n"));
            out.push_str(&format!("    <parent link=\"{parent_link}\"/>\n"));
            out.push_str(&format!("    <child link=\"{child_link}\"/>\n"));
            if k == 0 {
                out.push_str(&format!(
                    "    <origin xyz=\"{} {} {}\" rpy=\"0 0 0\"/>\n",
                    off.x, off.y, off.z
                ));
            } else {
                out.push_str("    <origin xyz=\"0 0 0\" rpy=\"0 0 0\"/>\n");
            }
            out.push_str(&format!("    <axis xyz=\"{axis}\"/>\n"));
            out.push_str(&format!(
                "    <limit lower=\"{}\" upper=\"{}\" effort=\"10\" velocity=\"3\"/>\n",
                limits[0], limits[1]
            ));
            out.push_str("  </joint>\n");
            if k < 2 {
                out.push_str(&format!("  <link name=\"{child_link}\">\n"));
                out.push_str(link_inertial);
                out.push_str("  </link>\n");
            } else {
                push_segment_link(&mut out, child);
            }
            parent_link = child_link;
        }
    }
    out.push_str("</robot>\n");
    out
}

/// The per-part meshes referenced by the URDF, in export order.
pub fn part_meshes(model: &HumanModel) -> Vec<(&'static str, &TriMesh)> {
    (0..NUM_SEGMENTS)
        .map(|seg| (PART_LABELS[seg], &model.meshes[seg]))
        .collect()
}

impl HumanModel {
    /// Query-point positions at the zero pose with the root at the origin.
    pub fn template_joint_positions(&self) -> alloc::collections::BTreeMap<&'static str, Vec3> {
        let posed = pose_human(self, &[0.0; NUM_POSE_PARAMS], Iso3::IDENTITY)
            .expect("zero pose is always valid");
        posed.world_joint_positions()
    }
}

impl PosedHuman {
    pub fn world_joint_positions(&self) -> alloc::collections::BTreeMap<&'static str, Vec3> {
        QUERY_JOINTS
            .iter()
            .map(|&name| {
                let p = joint_position(self, name).expect("query names are valid");
                (name, p)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;
    use nalgebra as na;

    fn neutral() -> PosedHuman {
        let model = build_human(&BodyParams::default()).unwrap();
        pose_human(&model, &[0.0; 27], Iso3::IDENTITY).unwrap()
    }

    fn jp(posed: &PosedHuman, name: &str) -> Vec3 {
        joint_position(posed, name).unwrap()
    }

    #[test]
    fn template_dimensions_at_zero_beta() {
        let model = build_human(&BodyParams::default()).unwrap();
        assert_relative_eq!(model.dims[SEG_TORSO].length, 0.55);
        assert_relative_eq!(model.dims[SEG_TORSO].radius, 0.14);
        assert_relative_eq!(model.dims[SEG_LEFT_UPPER_ARM].length, 0.28);
        assert_relative_eq!(model.dims[SEG_LEFT_UPPER_ARM].radius, 0.045);
        assert_relative_eq!(model.dims[SEG_LEFT_FOREARM].length, 0.26);
        assert_relative_eq!(model.dims[SEG_LEFT_FOREARM].radius, 0.040);
        assert_relative_eq!(model.dims[SEG_LEFT_THIGH].length, 0.42);
        assert_relative_eq!(model.dims[SEG_LEFT_THIGH].radius, 0.070);
        assert_relative_eq!(model.dims[SEG_LEFT_LOWER_LEG].length, 0.40);
        assert_relative_eq!(model.dims[SEG_LEFT_LOWER_LEG].radius, 0.050);
        assert!(model.head_semi.distance(vec3(0.10, 0.08, 0.12)) < 1e-12);
    }

    #[test]
    fn template_joint_positions_frozen_table() {
        let posed = neutral();
        let table: [(&str, Vec3); 15] = [
            ("pelvis", vec3(0.0, 0.0, 0.0)),
            ("neck", vec3(0.0, 0.0, 0.55)),
            ("left_shoulder", vec3(0.0, 0.185, 0.52)),
            ("right_shoulder", vec3(0.0, -0.185, 0.52)),
            ("left_elbow", vec3(0.0, 0.185, 0.24)),
            ("right_elbow", vec3(0.0, -0.185, 0.24)),
            ("left_wrist", vec3(0.0, 0.185, -0.02)),
            ("right_wrist", vec3(0.0, -0.185, -0.02)),
            ("left_hip", vec3(0.0, 0.09, 0.0)),
            ("right_hip", vec3(0.0, -0.09, 0.0)),
            ("left_knee", vec3(0.0, 0.09, -0.42)),
            ("right_knee", vec3(0.0, -0.09, -0.42)),
            ("left_ankle", vec3(0.0, 0.09, -0.82)),
            ("right_ankle", vec3(0.0, -0.09, -0.82)),
            ("head_top", vec3(0.0, 0.0, 0.82)),
        ];
        for (name, expected) in table {
            let got = jp(&posed, name);
            assert!(
                got.distance(expected) < 1e-12,
                "{name}: got {got:?}, expected {expected:?}"
            );
        }
    }

    #[test]
    fn height_beta_scales_every_length_by_1_15() {
        let mut params = BodyParams::default();
        params.beta[0] = 2.0;
        let model = build_human(&params).unwrap();
        let posed = pose_human(&model, &[0.0; 27], Iso3::IDENTITY).unwrap();
        let neutral = neutral();
        for name in QUERY_JOINTS {
            let scaled = jp(&posed, name);
            let base = jp(&neutral, name);
            assert!(
                scaled.distance(base * 1.15) < 1e-12,
                "{name}: {scaled:?} vs 1.15 * {base:?}"
            );
        }
        assert_relative_eq!(model.dims[SEG_TORSO].length, 0.55 * 1.15, epsilon = 1e-12);
        assert_relative_eq!(
            model.dims[SEG_LEFT_FOREARM].length,
            0.26 * 1.15,
            epsilon = 1e-12
        );
        // Radii are girth-controlled, not height-controlled.
        assert_relative_eq!(model.dims[SEG_TORSO].radius, 0.14, epsilon = 1e-12);
    }

    #[test]
    fn scale_maps_recomputed_by_hand() {
        let mut params = BodyParams::default();
        params.beta = [0.5, -1.0, 1.5, 0.8, -0.4, 0.0, 0.0, 0.0, 0.0, 0.0];
        let model = build_human(&params).unwrap();
        let h = 1.0 + 0.075 * 0.5;
        let l = 1.0 - 0.050;
        let g = 1.0 + 0.100 * 1.5;
        let t = 1.0 + 0.050 * 0.8;
        let s = 1.0 - 0.080 * 0.4;
        assert_relative_eq!(model.dims[SEG_TORSO].length, 0.55 * h * t, epsilon = 1e-12);
        assert_relative_eq!(model.dims[SEG_TORSO].radius, 0.14 * g, epsilon = 1e-12);
        assert_relative_eq!(
            model.dims[SEG_LEFT_THIGH].length,
            0.42 * h * l,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            model.dims[SEG_RIGHT_FOREARM].radius,
            0.040 * g,
            epsilon = 1e-12
        );
        let shoulder = model.joint_offsets[JOINT_LEFT_SHOULDER];
        assert_relative_eq!(shoulder.y, 0.185 * h * s, epsilon = 1e-12);
        assert_relative_eq!(shoulder.z, 0.52 * h * t, epsilon = 1e-12);
        // Reserved components must do nothing.
        let mut with_reserved = params;
        with_reserved.beta[7] = 1.9;
        let model2 = build_human(&with_reserved).unwrap();
        assert_eq!(
            model.dims[SEG_TORSO].length,
            model2.dims[SEG_TORSO].length
        );
    }

    #[test]
    fn beta_outside_range_is_clamped() {
        let mut params = BodyParams::default();
        params.beta[0] = 5.0;
        let model = build_human(&params).unwrap();
        assert_relative_eq!(model.dims[SEG_TORSO].length, 0.55 * 1.15, epsilon = 1e-12);
        assert_relative_eq!(model.params.beta[0], 2.0);
    }

    #[test]
    fn nan_parameters_are_rejected() {
        let mut params = BodyParams::default();
        params.beta[3] = f64::NAN;
        assert!(matches!(
            build_human(&params),
            Err(BodyError::InvalidParam(_))
        ));
        let model = build_human(&BodyParams::default()).unwrap();
        let mut theta = [0.0; 27];
        theta[5] = f64::INFINITY;
        assert!(matches!(
            pose_human(&model, &theta, Iso3::IDENTITY),
            Err(BodyError::InvalidParam(_))
        ));
    }

    #[test]
    fn elbow_bend_fk_matches_hand_composition() {
        // Left elbow (0, pi/2, 0), everything else zero: the forearm offset
        // (0, 0, -0.26) rotates to (-0.26, 0, 0) in the elbow frame, so the
        // wrist lands at elbow + (-0.26, 0, 0).
        let model = build_human(&BodyParams::default()).unwrap();
        let mut theta = [0.0; 27];
        theta[JOINT_LEFT_ELBOW * 3 + 1] = PI / 2.0;
        let posed = pose_human(&model, &theta, Iso3::IDENTITY).unwrap();
        assert!(!posed.clamped);
        let wrist = jp(&posed, "left_wrist");
        let expected = vec3(-0.26, 0.185, 0.24);
        assert!(
            wrist.distance(expected) < 1e-9,
            "wrist {wrist:?} expected {expected:?}"
        );
    }

    /// Independent FK oracle: compose the same joint tree with nalgebra
    /// isometries and axis-angle rotations.
    fn oracle_fk(
        model: &HumanModel,
        theta: &[f64; 27],
        root: Iso3,
    ) -> [na::Isometry3<f64>; NUM_SEGMENTS] {
        let to_na = |iso: Iso3| {
            na::Isometry3::from_parts(
                na::Translation3::new(iso.trans.x, iso.trans.y, iso.trans.z),
                na::UnitQuaternion::from_quaternion(na::Quaternion::new(
                    iso.rot.w, iso.rot.x, iso.rot.y, iso.rot.z,
                )),
            )
        };
        let mut world = [na::Isometry3::identity(); NUM_SEGMENTS];
        world[SEG_TORSO] = to_na(root);
        for (j, &(parent, child)) in JOINT_TREE.iter().enumerate() {
            let axis_angle =
                na::Vector3::new(theta[j * 3], theta[j * 3 + 1], theta[j * 3 + 2]);
            let rot = na::UnitQuaternion::from_scaled_axis(axis_angle);
            let off = model.joint_offsets[j];
            let local = na::Isometry3::from_parts(
                na::Translation3::new(off.x, off.y, off.z),
                rot,
            );
            world[child] = world[parent] * local;
        }
        world
    }

    #[test]
    fn fk_matches_nalgebra_oracle_on_random_poses() {
        let mut rng = SplitMix64::new(41);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let mut params = BodyParams::default();
            for b in &mut params.beta {
                *b = rng.uniform(-2.0, 2.0);
            }
            let model = build_human(&params).unwrap();
            let mut theta = [0.0; 27];
            for (i, th) in theta.iter_mut().enumerate() {
                let lim = joint_limits(i / 3)[i % 3];
                *th = rng.uniform(lim[0], lim[1]);
            }
            let root = Iso3::new(
                vec3(
                    rng.uniform(-2.0, 2.0),
                    rng.uniform(-2.0, 2.0),
                    rng.uniform(0.0, 1.0),
                ),
                Quat::rot_z(rng.uniform(-PI, PI)),
            );
            let posed = pose_human(&model, &theta, root).unwrap();
            assert!(!posed.clamped);
            let oracle = oracle_fk(&model, &theta, root);
            for seg in 0..NUM_SEGMENTS {
                let got = posed.seg_world[seg];
                let want = &oracle[seg];
                let dt = (got.trans.x - want.translation.x).abs()
                    .max((got.trans.y - want.translation.y).abs())
                    .max((got.trans.z - want.translation.z).abs());
                worst = worst.max(dt);
                // Compare rotations through a probe point.
                let probe = vec3(0.123, -0.456, 0.789);
                let gp = got.transform_point(probe);
                let wp = want.transform_point(&na::Point3::new(probe.x, probe.y, probe.z));
                let dr = (gp.x - wp.x)
                    .abs()
                    .max((gp.y - wp.y).abs())
                    .max((gp.z - wp.z).abs());
                worst = worst.max(dr);
            }
        }
        assert!(worst < 1e-9, "max FK deviation {worst}");
    }

    #[test]
    fn limit_clamping_sets_warning_flag() {
        let model = build_human(&BodyParams::default()).unwrap();
        let mut theta = [0.0; 27];
        theta[JOINT_LEFT_ELBOW * 3 + 1] = 3.0;
        let posed = pose_human(&model, &theta, Iso3::IDENTITY).unwrap();
        assert!(posed.clamped);
        assert_relative_eq!(posed.theta[JOINT_LEFT_ELBOW * 3 + 1], 2.6);
        // Negative bend clamps to zero.
        theta[JOINT_LEFT_ELBOW * 3 + 1] = -0.5;
        let posed = pose_human(&model, &theta, Iso3::IDENTITY).unwrap();
        assert!(posed.clamped);
        assert_relative_eq!(posed.theta[JOINT_LEFT_ELBOW * 3 + 1], 0.0);
    }

    #[test]
    fn posed_mesh_is_labeled_and_watertight() {
        let posed = neutral();
        assert_eq!(posed.mesh.triangles.len(), posed.tri_part.len());
        assert!(posed.mesh.is_watertight());
        for seg in 0..NUM_SEGMENTS {
            assert!(
                posed.tri_part.iter().any(|&p| p as usize == seg),
                "segment {seg} missing from labels"
            );
        }
    }

    #[test]
    fn world_capsules_follow_segments() {
        let model = build_human(&BodyParams::default()).unwrap();
        let mut theta = [0.0; 27];
        theta[JOINT_LEFT_SHOULDER * 3 + 1] = -PI / 2.0;
        let posed = pose_human(&model, &theta, Iso3::IDENTITY).unwrap();
        // Upper arm now extends forward from the shoulder.
        let cap = posed.world_capsules[SEG_LEFT_UPPER_ARM];
        assert!(cap.a.distance(vec3(0.0, 0.185, 0.52)) < 1e-12);
        assert!(cap.b.distance(vec3(0.28, 0.185, 0.52)) < 1e-9);
    }

    #[test]
    fn unknown_joint_is_an_error() {
        let posed = neutral();
        assert!(matches!(
            joint_position(&posed, "tail"),
            Err(BodyError::UnknownJoint(_))
        ));
    }

    #[test]
    fn build_is_deterministic() {
        let mut params = BodyParams::default();
        params.beta = [0.3, -0.7, 1.1, 0.0, 0.9, 0.0, 0.0, 0.0, 0.0, 0.0];
        let a = build_human(&params).unwrap();
        let b = build_human(&params).unwrap();
        assert_eq!(a.meshes[SEG_TORSO].vertices, b.meshes[SEG_TORSO].vertices);
        assert_eq!(a.meshes[SEG_HEAD].vertices, b.meshes[SEG_HEAD].vertices);
    }

    #[test]
    fn root_translation_moves_all_joints_rigidly() {
        let model = build_human(&BodyParams::default()).unwrap();
        let mut theta = [0.0; 27];
        theta[JOINT_LEFT_HIP * 3 + 1] = -PI / 2.0;
        let a = pose_human(&model, &theta, Iso3::IDENTITY).unwrap();
        let shift = vec3(1.5, -2.0, 0.45);
        let b = pose_human(&model, &theta, Iso3::from_translation(shift)).unwrap();
        for name in QUERY_JOINTS {
            let pa = jp(&a, name);
            let pb = jp(&b, name);
            assert!(pa.distance(pb - shift) < 1e-12, "{name}");
        }
    }

    #[test]
    fn urdf_roundtrips_through_independent_parser() {
        let model = build_human(&BodyParams::default()).unwrap();
        let urdf = export_urdf(&model);
        let robot = urdf_rs::read_from_string(&urdf).expect("urdf must parse");
        assert_eq!(robot.links.len(), 28);
        assert_eq!(robot.joints.len(), 27);
        assert!(robot
            .joints
            .iter()
            .all(|j| matches!(j.joint_type, urdf_rs::JointType::Revolute)));

        // Rebuild segment-level topology: walk x->y->z stages back to the
        // parent segment and compare with the model's joint tree.
        for (j, &(parent, child)) in JOINT_TREE.iter().enumerate() {
            let jn = JOINT_NAMES[j];
            let jx = robot
                .joints
                .iter()
                .find(|jo| jo.name == format!("{jn}_x"))
                .unwrap();
            let jz = robot
                .joints
                .iter()
                .find(|jo| jo.name == format!("{jn}_z"))
                .unwrap();
            assert_eq!(jx.parent.link, PART_LABELS[parent]);
            assert_eq!(jz.child.link, PART_LABELS[child]);
            let off = model.joint_offsets[j];
            assert_relative_eq!(jx.origin.xyz[0], off.x, epsilon = 1e-9);
            assert_relative_eq!(jx.origin.xyz[1], off.y, epsilon = 1e-9);
            assert_relative_eq!(jx.origin.xyz[2], off.z, epsilon = 1e-9);
        }

        // Segment links reference one mesh file each.
        for label in PART_LABELS {
            let link = robot.links.iter().find(|l| l.name == label).unwrap();
            assert_eq!(link.visual.len(), 1);
        }
    }
}
