//! Motion planning: joint-space RRT for free-space approaches, straight
//! Cartesian interpolation for contact phases, and trajectory compilation
//! into annotated joint paths.
//!
//! Distances between configurations are measured in normalized joint
//! units: each DOF maps its limit range onto [0, 1], so prismatic meters
//! and revolute radians become commensurable. Degenerate ranges (frozen
//! joints) contribute nothing.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::body::PosedHuman;
use crate::collide::CONTACT_TOLERANCE;
use crate::math::{atan2, cos, sin, Iso3};
use crate::motion::{Planner, Trajectory};
use crate::rng::SplitMix64;
use crate::robot::{
    ik_dls, robot_capsules, robot_fk, DofKind, IkParams, IkTarget, RobotError, RobotModel,
};
use crate::scene::{wall_boxes, SceneLayout};
use crate::shapes::{capsule_capsule_distance, capsule_obb_distance, Capsule, Obb};

/// Per-component joint motion bounds between adjacent path configurations.
pub const MAX_STEP_REVOLUTE: f64 = 0.02;
pub const MAX_STEP_PRISMATIC: f64 = 0.01;
/// Cartesian interpolation pitch.
pub const CARTESIAN_STEP: f64 = 0.002;
/// Deepest permitted tool-into-skin penetration during contact.
pub const CONTACT_DEPTH_LIMIT: f64 = 0.005;
/// Timestamps advance at least this much per step.
pub const MIN_DT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepAnnotation {
    pub waypoint: usize,
    pub contact: bool,
    pub planner: Planner,
}

#[derive(Clone, Debug, PartialEq, Serialize, Default)]
pub struct JointPath {
    pub configs: Vec<Vec<f64>>,
    pub timestamps: Vec<f64>,
    pub annotations: Vec<StepAnnotation>,
}

impl JointPath {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Checks the per-component max-step bound and strict timestamp order.
    pub fn continuity_ok(&self, model: &RobotModel) -> bool {
        for w in self.configs.windows(2) {
            for (i, dof) in model.dofs.iter().enumerate() {
                let bound = match dof.kind {
                    DofKind::BaseX | DofKind::BaseY | DofKind::Prismatic => MAX_STEP_PRISMATIC,
                    DofKind::BaseYaw | DofKind::Revolute => MAX_STEP_REVOLUTE,
                };
                if (w[1][i] - w[0][i]).abs() > bound + 1e-12 {
                    return false;
                }
            }
        }
        self.timestamps.windows(2).all(|t| t[1] > t[0])
            && self.timestamps.len() == self.configs.len()
            && self.annotations.len() == self.configs.len()
    }

    /// CSV rendering: timestamp, joint values by DOF name, waypoint index,
    /// contact flag.
    pub fn to_csv(&self, model: &RobotModel) -> String {
        let mut out = String::from("timestamp");
        for dof in &model.dofs {
            out.push(',');
            out.push_str(&dof.name);
        }
        out.push_str(",waypoint_index,contact\n");
        for i in 0..self.configs.len() {
            out.push_str(&format!("{}", self.timestamps[i]));
            for v in &self.configs[i] {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(
                ",{},{}\n",
                self.annotations[i].waypoint,
                if self.annotations[i].contact { 1 } else { 0 }
            ));
        }
        out
    }
}

/// Static obstacle view a planner runs against: the posed human's capsules
/// tagged with part indices, and all furniture plus walls as boxes.
#[derive(Clone, Debug)]
pub struct PlanWorld {
    pub human: Vec<(usize, Capsule)>,
    pub furniture: Vec<Obb>,
    /// Part indices the tool may touch during contact phases.
    pub allowed_parts: Vec<usize>,
}

impl PlanWorld {
    pub fn from_scene(posed: &PosedHuman, layout: &SceneLayout, allowed_parts: Vec<usize>) -> PlanWorld {
        let mut furniture = layout.obstacle_boxes(None);
        furniture.extend_from_slice(&wall_boxes(&layout.room));
        PlanWorld {
            human: posed
                .world_capsules
                .iter()
                .enumerate()
                .map(|(i, c)| (i, *c))
                .collect(),
            furniture,
            allowed_parts,
        }
    }

    /// Open space with no human and no furniture.
    pub fn empty() -> PlanWorld {
        PlanWorld {
            human: Vec::new(),
            furniture: Vec::new(),
            allowed_parts: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("start configuration is in collision")]
    InvalidStart,
    #[error("no collision-free path found: {0}")]
    RrtFailure(String),
    #[error("inverse kinematics failed at step {step}: {source}")]
    IkNoConverge { step: usize, source: RobotError },
    #[error("non-tool contact with the human at step {step} ({depth_mm:.1} mm deep)")]
    ForbiddenContact { step: usize, depth_mm: f64 },
    #[error("robot touches furniture at step {step} ({depth_mm:.1} mm deep)")]
    FurnitureCollision { step: usize, depth_mm: f64 },
    #[error("waypoint {waypoint} requests contact with the RRT planner")]
    PlannerMisuse { waypoint: usize },
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::InvalidStart => "invalid_start",
            PlanError::RrtFailure(_) => "rrt_failure",
            PlanError::IkNoConverge { .. } => "ik_no_converge",
            PlanError::ForbiddenContact { .. } => "forbidden_contact",
            PlanError::FurnitureCollision { .. } => "furniture_collision",
            PlanError::PlannerMisuse { .. } => "planner_misuse",
        }
    }
}

/// True when the robot at `q` touches any furniture or any part of the
/// human; the free-space rule RRT plans under.
pub fn in_free_collision(model: &RobotModel, q: &[f64], world: &PlanWorld) -> bool {
    let caps = robot_capsules(model, q);
    for (_, cap) in &caps {
        for obb in &world.furniture {
            if capsule_obb_distance(cap, obb) < -CONTACT_TOLERANCE {
                return true;
            }
        }
        for (_, h) in &world.human {
            if capsule_capsule_distance(cap, h) < -CONTACT_TOLERANCE {
                return true;
            }
        }
    }
    false
}

/// Clearance a goal configuration must keep between the robot and anything
/// it is not meant to touch. Without it the base search accepts placements a
/// fraction of a millimetre from the human, and the first few tracking steps
/// of the next segment push past zero.
pub const GOAL_CLEARANCE: f64 = 0.02;

/// Smallest distance from any robot link to the furniture or to human parts
/// it must not touch; pairs exempted by `contact_spec` are skipped.
fn standoff_clearance(
    model: &RobotModel,
    q: &[f64],
    world: &PlanWorld,
    contact_spec: &[usize],
) -> f64 {
    let caps = robot_capsules(model, q);
    let mut min_d = f64::INFINITY;
    for (link, cap) in &caps {
        for obb in &world.furniture {
            min_d = min_d.min(capsule_obb_distance(cap, obb));
        }
        for (part, h) in &world.human {
            if *link == model.tool_link && contact_spec.contains(part) {
                continue;
            }
            min_d = min_d.min(capsule_capsule_distance(cap, h));
        }
    }
    min_d
}

/// Solves IK for `target` and keeps drawing fresh base placements until the
/// solution satisfies the contact policy (with an empty `contact_spec`,
/// until it is collision-free) with at least `GOAL_CLEARANCE` to spare.
/// Damped least squares treats all joints equally and happily parks the base
/// inside furniture; the retries re-seed the base on a ring around the
/// target, facing it, which is where a mobile manipulator would actually
/// stand.
pub fn collision_free_ik(
    model: &RobotModel,
    target: Iso3,
    q_seed: &[f64],
    contact_spec: &[usize],
    world: &PlanWorld,
    seed: u64,
) -> Result<Vec<f64>, PlanError> {
    let mut rng = SplitMix64::new(seed);
    let mut last_ik_err = None;
    let mut solved_but_colliding = false;
    for attempt in 0..20usize {
        let mut q0 = q_seed.to_vec();
        if attempt > 0 && model.dofs.len() >= 3 {
            let ang = rng.uniform(-core::f64::consts::PI, core::f64::consts::PI);
            let standoff = rng.uniform(0.35, 0.75);
            let bx = target.trans.x + standoff * cos(ang);
            let by = target.trans.y + standoff * sin(ang);
            q0[0] = bx.clamp(model.dofs[0].limits[0], model.dofs[0].limits[1]);
            q0[1] = by.clamp(model.dofs[1].limits[0], model.dofs[1].limits[1]);
            q0[2] = atan2(target.trans.y - q0[1], target.trans.x - q0[0]);
        }
        match ik_dls(model, IkTarget::Pose(target), &q0, IkParams::default()) {
            Ok(sol) => {
                let mut violations = Vec::new();
                classify_contacts(model, &sol.q, world, contact_spec, 0, &mut violations);
                if violations.is_empty()
                    && standoff_clearance(model, &sol.q, world, contact_spec) >= GOAL_CLEARANCE
                {
                    return Ok(sol.q);
                }
                solved_but_colliding = true;
            }
            Err(e) => last_ik_err = Some(e),
        }
    }
    if solved_but_colliding {
        Err(PlanError::RrtFailure(
            "every reachable goal configuration is in collision".into(),
        ))
    } else {
        Err(PlanError::IkNoConverge {
            step: 0,
            source: last_ik_err.expect("no solution and no error is impossible"),
        })
    }
}

fn normalized_delta(model: &RobotModel, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, dof) in model.dofs.iter().enumerate() {
        let range = dof.limits[1] - dof.limits[0];
        if range > 1e-9 {
            let d = (b[i] - a[i]) / range;
            s += d * d;
        }
    }
    crate::math::sqrt(s)
}

fn lerp_config(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
}

/// Edge validity at the documented 0.02 normalized-unit resolution; the
/// start configuration is assumed already checked.
fn edge_free(model: &RobotModel, a: &[f64], b: &[f64], world: &PlanWorld, resolution: f64) -> bool {
    let dist = normalized_delta(model, a, b);
    let n = (libm::ceil(dist / resolution) as usize).max(1);
    for i in 1..=n {
        let q = lerp_config(a, b, i as f64 / n as f64);
        if in_free_collision(model, &q, world) {
            return false;
        }
    }
    true
}

/// Splits every leg so adjacent configurations respect the max-step bound,
/// dropping exact duplicates.
fn densify(model: &RobotModel, path: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![path[0].clone()];
    for w in path.windows(2) {
        let mut n = 1usize;
        for (i, dof) in model.dofs.iter().enumerate() {
            let bound = match dof.kind {
                DofKind::BaseX | DofKind::BaseY | DofKind::Prismatic => MAX_STEP_PRISMATIC,
                DofKind::BaseYaw | DofKind::Revolute => MAX_STEP_REVOLUTE,
            };
            let steps = libm::ceil((w[1][i] - w[0][i]).abs() / bound) as usize;
            n = n.max(steps);
        }
        for i in 1..=n {
            let q = lerp_config(&w[0], &w[1], i as f64 / n as f64);
            if out.last().map(|l| l != &q).unwrap_or(true) {
                out.push(q);
            }
        }
    }
    out
}

/// Timestamps from constant tool speed: dt is tool displacement over
/// speed, floored so time always advances.
fn assign_timestamps(model: &RobotModel, configs: &[Vec<f64>], speed: f64) -> Vec<f64> {
    let mut t = 0.0;
    let mut out = Vec::with_capacity(configs.len());
    out.push(0.0);
    let mut prev = robot_fk(model, &configs[0]).tool_pose.trans;
    for q in &configs[1..] {
        let tip = robot_fk(model, q).tool_pose.trans;
        t += (tip.distance(prev) / speed).max(MIN_DT);
        out.push(t);
        prev = tip;
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct RrtParams {
    pub step: f64,
    pub goal_bias: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub smooth: bool,
    pub speed: f64,
}

impl Default for RrtParams {
    fn default() -> Self {
        RrtParams {
            step: 0.1,
            goal_bias: 0.1,
            max_iters: 20000,
            seed: 0,
            smooth: true,
            speed: 0.2,
        }
    }
}

/// Joint-space RRT with straight-line steering. The direct start-goal edge
/// is the first candidate; successful trees are shortcut-smoothed with 100
/// seeded attempts and densified to the max-step bound.
pub fn rrt_plan(
    model: &RobotModel,
    q_start: &[f64],
    q_goal: &[f64],
    world: &PlanWorld,
    params: RrtParams,
) -> Result<JointPath, PlanError> {
    if in_free_collision(model, q_start, world) {
        return Err(PlanError::InvalidStart);
    }
    if in_free_collision(model, q_goal, world) {
        return Err(PlanError::RrtFailure(
            "goal configuration is in collision".into(),
        ));
    }

    let mut rng = SplitMix64::new(params.seed);
    let check = 0.02;

    let mut path = if edge_free(model, q_start, q_goal, world, check) {
        vec![q_start.to_vec(), q_goal.to_vec()]
    } else {
        let mut nodes: Vec<Vec<f64>> = vec![q_start.to_vec()];
        let mut parents: Vec<usize> = vec![0];
        let mut goal_index = None;
        for _ in 0..params.max_iters {
            let sample: Vec<f64> = if rng.uniform(0.0, 1.0) < params.goal_bias {
                q_goal.to_vec()
            } else {
                model
                    .dofs
                    .iter()
                    .map(|d| rng.uniform(d.limits[0], d.limits[1]))
                    .collect()
            };
            let mut nearest = 0;
            let mut best = f64::INFINITY;
            for (i, n) in nodes.iter().enumerate() {
                let d = normalized_delta(model, n, &sample);
                if d < best {
                    best = d;
                    nearest = i;
                }
            }
            if best < 1e-12 {
                continue;
            }
            let t = (params.step / best).min(1.0);
            let q_new = lerp_config(&nodes[nearest], &sample, t);
            if !edge_free(model, &nodes[nearest], &q_new, world, check) {
                continue;
            }
            nodes.push(q_new.clone());
            parents.push(nearest);
            if normalized_delta(model, &q_new, q_goal) <= params.step
                && edge_free(model, &q_new, q_goal, world, check)
            {
                nodes.push(q_goal.to_vec());
                parents.push(nodes.len() - 2);
                goal_index = Some(nodes.len() - 1);
                break;
            }
        }
        let goal_index = goal_index.ok_or_else(|| {
            PlanError::RrtFailure(format!("budget of {} iterations exhausted", params.max_iters))
        })?;
        let mut rev = Vec::new();
        let mut at = goal_index;
        loop {
            rev.push(nodes[at].clone());
            if at == 0 {
                break;
            }
            at = parents[at];
        }
        rev.reverse();
        rev
    };

    if params.smooth {
        for _ in 0..100 {
            let len = path.len();
            let a = (rng.next_u64() % len as u64) as usize;
            let b = (rng.next_u64() % len as u64) as usize;
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if j > i + 1 && edge_free(model, &path[i], &path[j], world, check) {
                path.drain(i + 1..j);
            }
        }
    }

    let configs = densify(model, &path);
    let timestamps = assign_timestamps(model, &configs, params.speed);
    let annotations = vec![
        StepAnnotation {
            waypoint: 0,
            contact: false,
            planner: Planner::Rrt,
        };
        configs.len()
    ];
    Ok(JointPath {
        configs,
        timestamps,
        annotations,
    })
}

/// Independent validation pass: re-checks every leg of the path at a finer
/// normalized resolution (the soundness oracle uses 10x finer than the
/// planner's own edge checks).
pub fn recheck_path(
    model: &RobotModel,
    path: &JointPath,
    world: &PlanWorld,
    resolution: f64,
) -> bool {
    if path.is_empty() {
        return false;
    }
    if in_free_collision(model, &path.configs[0], world) {
        return false;
    }
    path.configs
        .windows(2)
        .all(|w| edge_free(model, &w[0], &w[1], world, resolution))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollisionPolicy {
    /// Abort on the first violation; the dataset-collection rule.
    Strict,
    /// Complete the path and report all violations; the validator rule.
    Audit,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepViolation {
    pub step: usize,
    pub code: &'static str,
    pub depth_mm: f64,
    /// Robot link that made the contact.
    pub link: usize,
    /// Human part index, or the furniture box index for furniture hits.
    pub other: usize,
}

/// Classifies the robot's contacts at one configuration under the contact
/// policy: tool-to-allowed-part penetration up to 5 mm is fine, everything
/// else is a violation.
fn classify_contacts(
    model: &RobotModel,
    q: &[f64],
    world: &PlanWorld,
    contact_spec: &[usize],
    step: usize,
    violations: &mut Vec<StepViolation>,
) {
    let caps = robot_capsules(model, q);
    for (link, cap) in &caps {
        for (oi, obb) in world.furniture.iter().enumerate() {
            let d = capsule_obb_distance(cap, obb);
            if d < -CONTACT_TOLERANCE {
                violations.push(StepViolation {
                    step,
                    code: "furniture_collision",
                    depth_mm: -d * 1e3,
                    link: *link,
                    other: oi,
                });
            }
        }
        for (part, h) in &world.human {
            let d = capsule_capsule_distance(cap, h);
            let tool_on_allowed = *link == model.tool_link && contact_spec.contains(part);
            let limit = if tool_on_allowed {
                CONTACT_DEPTH_LIMIT
            } else {
                CONTACT_TOLERANCE
            };
            if d < -limit {
                violations.push(StepViolation {
                    step,
                    code: "forbidden_contact",
                    depth_mm: -d * 1e3,
                    link: *link,
                    other: *part,
                });
            }
        }
    }
}

fn first_violation_error(v: &StepViolation) -> PlanError {
    match v.code {
        "furniture_collision" => PlanError::FurnitureCollision {
            step: v.step,
            depth_mm: v.depth_mm,
        },
        _ => PlanError::ForbiddenContact {
            step: v.step,
            depth_mm: v.depth_mm,
        },
    }
}

/// Straight-line Cartesian plan: position interpolated linearly and
/// orientation spherically at 2 mm pitch, each step solved by DLS IK
/// seeded from the previous configuration. A nullspace pull toward the
/// segment's start configuration keeps redundant joints, the mobile base
/// above all, from drifting over the course of many small solves.
pub fn cartesian_plan(
    model: &RobotModel,
    pose_start: Iso3,
    pose_goal: Iso3,
    q_seed: &[f64],
    speed: f64,
    contact_spec: &[usize],
    world: &PlanWorld,
    policy: CollisionPolicy,
) -> Result<(JointPath, Vec<StepViolation>), PlanError> {
    let pos_dist = pose_goal.trans.distance(pose_start.trans);
    let rot_dist = pose_start.rot.angle_to(pose_goal.rot);
    let n = (libm::ceil(pos_dist / CARTESIAN_STEP) as usize)
        .max(libm::ceil(rot_dist / MAX_STEP_REVOLUTE) as usize);

    let mut configs = vec![q_seed.to_vec()];
    let mut violations = Vec::new();
    let mut q = q_seed.to_vec();
    for k in 1..=n {
        let t = k as f64 / n as f64;
        let target = Iso3::new(
            pose_start.trans.lerp(pose_goal.trans, t),
            pose_start.rot.slerp(pose_goal.rot, t),
        );
        let solved = crate::robot::ik_dls_posture(
            model,
            IkTarget::Pose(target),
            &q,
            IkParams::default(),
            Some((q_seed, 0.5)),
        )
        .map_err(|source| PlanError::IkNoConverge { step: k, source })?;
        q = solved.q;
        let before = violations.len();
        classify_contacts(model, &q, world, contact_spec, configs.len(), &mut violations);
        if policy == CollisionPolicy::Strict && violations.len() > before {
            return Err(first_violation_error(&violations[before]));
        }
        configs.push(q.clone());
    }

    let dense = densify(model, &configs);
    let timestamps = assign_timestamps(model, &dense, speed);
    let annotations = vec![
        StepAnnotation {
            waypoint: 0,
            contact: !contact_spec.is_empty(),
            planner: Planner::Cartesian,
        };
        dense.len()
    ];
    Ok((
        JointPath {
            configs: dense,
            timestamps,
            annotations,
        },
        violations,
    ))
}

/// Compiles a grounded trajectory into one annotated joint path: every
/// waypoint dispatches to its chosen planner, segments concatenate with
/// continuous timestamps, and each step carries its waypoint's index and
/// contact flag.
pub fn compile_trajectory(
    model: &RobotModel,
    traj: &Trajectory,
    world: &PlanWorld,
    q_init: &[f64],
    seed: u64,
    policy: CollisionPolicy,
) -> Result<(JointPath, Vec<StepViolation>), PlanError> {
    for (wi, wp) in traj.waypoints.iter().enumerate() {
        if wp.contact && wp.planner == Planner::Rrt {
            return Err(PlanError::PlannerMisuse { waypoint: wi });
        }
    }

    let mut out = JointPath::default();
    let mut violations: Vec<StepViolation> = Vec::new();
    let mut q = q_init.to_vec();
    out.configs.push(q.clone());
    out.timestamps.push(0.0);
    out.annotations.push(StepAnnotation {
        waypoint: 0,
        contact: false,
        planner: traj
            .waypoints
            .first()
            .map(|w| w.planner)
            .unwrap_or(Planner::Rrt),
    });

    for (wi, wp) in traj.waypoints.iter().enumerate() {
        let target = Iso3::new(wp.position, wp.orientation);
        let segment = match wp.planner {
            Planner::Rrt => {
                let goal = collision_free_ik(
                    model,
                    target,
                    &q,
                    &[],
                    world,
                    crate::rng::derive_seed(seed, "goal", wi as u64),
                )
                .map_err(|e| match e {
                    PlanError::IkNoConverge { source, .. } => {
                        PlanError::IkNoConverge { step: wi, source }
                    }
                    other => other,
                })?;
                rrt_plan(
                    model,
                    &q,
                    &goal,
                    world,
                    RrtParams {
                        seed: crate::rng::derive_seed(seed, "rrt", wi as u64),
                        speed: wp.speed,
                        ..RrtParams::default()
                    },
                )?
            }
            Planner::Cartesian => {
                let start_pose = robot_fk(model, &q).tool_pose;
                let contact_spec: &[usize] = if wp.contact { &world.allowed_parts } else { &[] };
                let (path, mut step_violations) = cartesian_plan(
                    model,
                    start_pose,
                    target,
                    &q,
                    wp.speed,
                    contact_spec,
                    world,
                    policy,
                )?;
                for v in &mut step_violations {
                    v.step += out.configs.len() - 1;
                }
                violations.append(&mut step_violations);
                path
            }
        };
        let t_base = *out.timestamps.last().expect("path never empty");
        for i in 1..segment.configs.len() {
            out.configs.push(segment.configs[i].clone());
            out.timestamps.push(t_base + segment.timestamps[i]);
            out.annotations.push(StepAnnotation {
                waypoint: wi,
                contact: wp.contact,
                planner: wp.planner,
            });
        }
        q = out.configs.last().expect("path never empty").clone();
    }
    Ok((out, violations))
}
