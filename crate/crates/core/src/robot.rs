//! Config-defined robot: a serial chain on a planar base, with forward
//! kinematics, an analytic end-effector Jacobian, and damped-least-squares
//! inverse kinematics.
//!
//! A robot is a JSON document: an ordered list of links, each articulated by
//! one joint (`planar_base` contributes x, y, yaw; `prismatic` and
//! `revolute` one DOF each; `fixed` none). Link i's parent is link i-1; the
//! first link must be the planar base. The single link flagged `is_tool`
//! carries the tool frame whose `+z` is the approach axis and whose origin
//! is the tool tip.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{vec3, Iso3, Quat, Vec3};
use crate::shapes::Capsule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    PlanarBase,
    Prismatic,
    Revolute,
    Fixed,
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
pub struct OriginConfig {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl OriginConfig {
    pub fn to_iso(&self) -> Iso3 {
        let rot = Quat::rot_z(self.rpy[2]) * Quat::rot_y(self.rpy[1]) * Quat::rot_x(self.rpy[0]);
        Iso3::new(vec3(self.xyz[0], self.xyz[1], self.xyz[2]), rot)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapsuleConfig {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LimitSpec {
    Single([f64; 2]),
    PerAxis([[f64; 2]; 3]),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinkConfig {
    pub name: String,
    pub joint: JointKind,
    #[serde(default)]
    pub axis: Option<[f64; 3]>,
    #[serde(default)]
    pub limits: Option<LimitSpec>,
    #[serde(default)]
    pub origin: OriginConfig,
    #[serde(default)]
    pub capsules: Vec<CapsuleConfig>,
    #[serde(default)]
    pub is_tool: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobotConfig {
    pub name: String,
    pub links: Vec<LinkConfig>,
    pub home: Vec<f64>,
    pub tool_frame: OriginConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum RobotError {
    #[error("invalid robot config: {0}")]
    InvalidConfig(String),
    #[error("ik did not converge: position residual {pos_err} m, rotation residual {rot_err} rad after {iterations} iterations")]
    IkNoConverge {
        pos_err: f64,
        rot_err: f64,
        iterations: usize,
    },
}

fn bad(msg: impl Into<String>) -> RobotError {
    RobotError::InvalidConfig(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofKind {
    BaseX,
    BaseY,
    BaseYaw,
    Prismatic,
    Revolute,
}

/// One scalar degree of freedom: which link it moves and its limits.
#[derive(Clone, Debug)]
pub struct Dof {
    pub link: usize,
    pub kind: DofKind,
    pub limits: [f64; 2],
    pub name: String,
}

#[derive(Clone, Debug)]
pub struct RobotLink {
    pub name: String,
    pub joint: JointKind,
    pub axis: Vec3,
    pub origin: Iso3,
    pub capsules: Vec<Capsule>,
    pub is_tool: bool,
}

#[derive(Clone, Debug)]
pub struct RobotModel {
    pub name: String,
    pub links: Vec<RobotLink>,
    pub dofs: Vec<Dof>,
    pub home: Vec<f64>,
    pub tool_link: usize,
    pub tool_frame: Iso3,
}

impl RobotModel {
    pub fn from_json(text: &str) -> Result<RobotModel, RobotError> {
        let config: RobotConfig =
            serde_json::from_str(text).map_err(|e| bad(format!("parse failure: {e}")))?;
        RobotModel::from_config(&config)
    }

    pub fn from_config(config: &RobotConfig) -> Result<RobotModel, RobotError> {
        if config.links.is_empty() {
            return Err(bad("robot needs at least one link"));
        }
        if config.links[0].joint != JointKind::PlanarBase {
            return Err(bad("the first link must be the planar base"));
        }
        if config.links[1..]
            .iter()
            .any(|l| l.joint == JointKind::PlanarBase)
        {
            return Err(bad("exactly one planar_base link is allowed"));
        }
        let tools: Vec<usize> = config
            .links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_tool)
            .map(|(i, _)| i)
            .collect();
        if tools.len() != 1 {
            return Err(bad(format!(
                "exactly one link must set is_tool, found {}",
                tools.len()
            )));
        }

        let mut links = Vec::new();
        let mut dofs = Vec::new();
        for (i, lc) in config.links.iter().enumerate() {
            let axis = match lc.joint {
                JointKind::Prismatic | JointKind::Revolute => {
                    let a = lc
                        .axis
                        .ok_or_else(|| bad(format!("link {} needs an axis", lc.name)))?;
                    vec3(a[0], a[1], a[2])
                        .try_normalized()
                        .ok_or_else(|| bad(format!("link {} has a zero axis", lc.name)))?
                }
                _ => Vec3::ZERO,
            };
            match lc.joint {
                JointKind::PlanarBase => {
                    let lims = match &lc.limits {
                        Some(LimitSpec::PerAxis(l)) => *l,
                        _ => {
                            return Err(bad(format!(
                                "planar base {} needs per-axis limits [[xlo,xhi],[ylo,yhi],[yawlo,yawhi]]",
                                lc.name
                            )))
                        }
                    };
                    for (kind, lim, tag) in [
                        (DofKind::BaseX, lims[0], "x"),
                        (DofKind::BaseY, lims[1], "y"),
                        (DofKind::BaseYaw, lims[2], "yaw"),
                    ] {
                        if !(lim[0] < lim[1]) {
                            return Err(bad(format!(
                                "limits for {}/{tag} must satisfy lower < upper",
                                lc.name
                            )));
                        }
                        dofs.push(Dof {
                            link: i,
                            kind,
                            limits: lim,
                            name: format!("{}_{}", lc.name, tag),
                        });
                    }
                }
                JointKind::Prismatic | JointKind::Revolute => {
                    let lim = match &lc.limits {
                        Some(LimitSpec::Single(l)) => *l,
                        _ => {
                            return Err(bad(format!(
                                "link {} needs limits [lower, upper]",
                                lc.name
                            )))
                        }
                    };
                    if !(lim[0] < lim[1]) {
                        return Err(bad(format!(
                            "limits for {} must satisfy lower < upper",
                            lc.name
                        )));
                    }
                    dofs.push(Dof {
                        link: i,
                        kind: if lc.joint == JointKind::Prismatic {
                            DofKind::Prismatic
                        } else {
                            DofKind::Revolute
                        },
                        limits: lim,
                        name: lc.name.clone(),
                    });
                }
                JointKind::Fixed => {}
            }
            links.push(RobotLink {
                name: lc.name.clone(),
                joint: lc.joint,
                axis,
                origin: lc.origin.to_iso(),
                capsules: lc
                    .capsules
                    .iter()
                    .map(|c| {
                        Capsule::new(
                            vec3(c.a[0], c.a[1], c.a[2]),
                            vec3(c.b[0], c.b[1], c.b[2]),
                            c.radius,
                        )
                    })
                    .collect(),
                is_tool: lc.is_tool,
            });
        }
        if config.home.len() != dofs.len() {
            return Err(bad(format!(
                "home configuration has {} values for {} degrees of freedom",
                config.home.len(),
                dofs.len()
            )));
        }
        Ok(RobotModel {
            name: config.name.clone(),
            links,
            dofs,
            home: config.home.clone(),
            tool_link: tools[0],
            tool_frame: config.tool_frame.to_iso(),
        })
    }

    pub fn nq(&self) -> usize {
        self.dofs.len()
    }

    pub fn clamp_q(&self, q: &mut [f64]) -> bool {
        let mut clamped = false;
        for (v, dof) in q.iter_mut().zip(&self.dofs) {
            let w = v.clamp(dof.limits[0], dof.limits[1]);
            if w != *v {
                *v = w;
                clamped = true;
            }
        }
        clamped
    }
}

#[derive(Clone, Debug)]
pub struct RobotFk {
    /// World pose of every link frame (after its joint motion).
    pub link_poses: Vec<Iso3>,
    /// World pose of every joint frame (before its joint motion).
    pub joint_frames: Vec<Iso3>,
    /// Tool tip pose: tool link pose composed with the tool frame.
    pub tool_pose: Iso3,
    pub clamped: bool,
}

pub fn robot_fk(model: &RobotModel, q: &[f64]) -> RobotFk {
    assert_eq!(q.len(), model.nq(), "joint vector length mismatch");
    let mut qc: Vec<f64> = q.to_vec();
    let clamped = model.clamp_q(&mut qc);

    let mut link_poses = Vec::with_capacity(model.links.len());
    let mut joint_frames = Vec::with_capacity(model.links.len());
    let mut qi = 0;
    let mut parent = Iso3::IDENTITY;
    for link in &model.links {
        let joint_frame = parent * link.origin;
        let motion = match link.joint {
            JointKind::PlanarBase => {
                let m = Iso3::planar(qc[qi], qc[qi + 1], qc[qi + 2]);
                qi += 3;
                m
            }
            JointKind::Prismatic => {
                let m = Iso3::from_translation(link.axis * qc[qi]);
                qi += 1;
                m
            }
            JointKind::Revolute => {
                let m = Iso3::from_rotation(Quat::from_axis_angle(link.axis, qc[qi]));
                qi += 1;
                m
            }
            JointKind::Fixed => Iso3::IDENTITY,
        };
        let pose = joint_frame * motion;
        joint_frames.push(joint_frame);
        link_poses.push(pose);
        parent = pose;
    }
    let tool_pose = link_poses[model.tool_link] * model.tool_frame;
    RobotFk {
        link_poses,
        joint_frames,
        tool_pose,
        clamped,
    }
}

/// World-space collision capsules of every link at configuration `q`.
pub fn robot_capsules(model: &RobotModel, q: &[f64]) -> Vec<(usize, Capsule)> {
    let fk = robot_fk(model, q);
    let mut out = Vec::new();
    for (i, link) in model.links.iter().enumerate() {
        for c in &link.capsules {
            out.push((i, c.transformed(&fk.link_poses[i])));
        }
    }
    out
}

/// Geometric Jacobian at the tool tip: column i is [v; w] for unit velocity
/// of DOF i.
pub fn jacobian(model: &RobotModel, fk: &RobotFk) -> Vec<[f64; 6]> {
    let tip = fk.tool_pose.trans;
    let mut cols = Vec::with_capacity(model.nq());
    for dof in &model.dofs {
        let frame = &fk.joint_frames[dof.link];
        let col = match dof.kind {
            DofKind::BaseX => {
                let v = frame.rot.rotate(Vec3::X);
                [v.x, v.y, v.z, 0.0, 0.0, 0.0]
            }
            DofKind::BaseY => {
                let v = frame.rot.rotate(Vec3::Y);
                [v.x, v.y, v.z, 0.0, 0.0, 0.0]
            }
            DofKind::BaseYaw => {
                // The planar joint translates before it rotates, so the yaw
                // axis passes through the moved base origin, not the joint
                // frame origin.
                let w = frame.rot.rotate(Vec3::Z);
                let v = w.cross(tip - fk.link_poses[dof.link].trans);
                [v.x, v.y, v.z, w.x, w.y, w.z]
            }
            DofKind::Prismatic => {
                let axis = fk.joint_frames[dof.link]
                    .rot
                    .rotate(model.links[dof.link].axis);
                [axis.x, axis.y, axis.z, 0.0, 0.0, 0.0]
            }
            DofKind::Revolute => {
                let w = fk.joint_frames[dof.link]
                    .rot
                    .rotate(model.links[dof.link].axis);
                let v = w.cross(tip - frame.trans);
                [v.x, v.y, v.z, w.x, w.y, w.z]
            }
        };
        cols.push(col);
    }
    cols
}

#[derive(Clone, Copy, Debug)]
pub enum IkTarget {
    Position(Vec3),
    Pose(Iso3),
}

#[derive(Clone, Copy, Debug)]
pub struct IkParams {
    pub tol_pos: f64,
    pub tol_rot: f64,
    pub max_iters: usize,
    pub lambda: f64,
}

impl Default for IkParams {
    fn default() -> Self {
        IkParams {
            tol_pos: 1e-3,
            tol_rot: 0.01,
            max_iters: 200,
            lambda: 0.05,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IkResult {
    pub q: Vec<f64>,
    pub iterations: usize,
    pub pos_err: f64,
    pub rot_err: f64,
}

/// Rotation error as a world-frame rotation vector taking `current` to
/// `target` along the shortest arc.
fn rotation_error(target: Quat, current: Quat) -> Vec3 {
    (target * current.conjugate()).to_rotvec()
}

/// Solves A x = b for symmetric positive-definite A of size n ≤ 6, by
/// Gaussian elimination with partial pivoting.
fn solve_small(a: &mut [[f64; 6]; 6], b: &mut [f64; 6], n: usize) -> Option<()> {
    for k in 0..n {
        let mut piv = k;
        for r in (k + 1)..n {
            if a[r][k].abs() > a[piv][k].abs() {
                piv = r;
            }
        }
        if a[piv][k].abs() < 1e-15 {
            return None;
        }
        if piv != k {
            a.swap(piv, k);
            b.swap(piv, k);
        }
        for r in (k + 1)..n {
            let f = a[r][k] / a[k][k];
            for c in k..n {
                a[r][c] -= f * a[k][c];
            }
            b[r] -= f * b[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in (k + 1)..n {
            s -= a[k][c] * b[c];
        }
        b[k] = s / a[k][k];
    }
    Some(())
}

pub fn ik_dls(
    model: &RobotModel,
    target: IkTarget,
    q_init: &[f64],
    params: IkParams,
) -> Result<IkResult, RobotError> {
    ik_dls_posture(model, target, q_init, params, None)
}

/// `ik_dls` with an optional secondary objective: `(q_ref, gain)` pulls the
/// configuration toward `q_ref` inside the task nullspace. Redundant joints
/// stop drifting across repeated warm-started solves while the task-space
/// solution is unaffected to first order.
pub(crate) fn ik_dls_posture(
    model: &RobotModel,
    target: IkTarget,
    q_init: &[f64],
    params: IkParams,
    posture: Option<(&[f64], f64)>,
) -> Result<IkResult, RobotError> {
    let mut q: Vec<f64> = q_init.to_vec();
    model.clamp_q(&mut q);
    let m = match target {
        IkTarget::Position(_) => 3,
        IkTarget::Pose(_) => 6,
    };

    // Stalls at joint-limit walls are broken by deterministic random
    // restarts drawn from a fixed-seed stream, so equal inputs still give
    // equal outputs.
    let mut restart_rng = crate::rng::SplitMix64::new(0x6b5f_c4e1_9d27_3a88);
    let mut best_err = f64::INFINITY;
    let mut stall = 0usize;

    let mut pos_err = f64::INFINITY;
    let mut rot_err = f64::INFINITY;
    for iter in 0..=params.max_iters {
        let fk = robot_fk(model, &q);
        let (mut e_p, mut e_r) = match target {
            IkTarget::Position(p) => (p - fk.tool_pose.trans, Vec3::ZERO),
            IkTarget::Pose(pose) => (
                pose.trans - fk.tool_pose.trans,
                rotation_error(pose.rot, fk.tool_pose.rot),
            ),
        };
        pos_err = e_p.norm();
        rot_err = e_r.norm();
        let converged = pos_err <= params.tol_pos
            && (m == 3 || rot_err <= params.tol_rot);
        if converged {
            return Ok(IkResult {
                q,
                iterations: iter,
                pos_err,
                rot_err,
            });
        }
        if iter == params.max_iters {
            break;
        }

        let err_total = pos_err + rot_err;
        if err_total < best_err - 1e-10 {
            best_err = err_total;
            stall = 0;
        } else {
            stall += 1;
            if stall >= 12 {
                for (v, dof) in q.iter_mut().zip(&model.dofs) {
                    *v = restart_rng.uniform(dof.limits[0], dof.limits[1]);
                }
                best_err = f64::INFINITY;
                stall = 0;
                continue;
            }
        }

        if pos_err > 0.5 {
            e_p = e_p * (0.5 / pos_err);
        }
        if rot_err > 0.7 {
            e_r = e_r * (0.7 / rot_err);
        }

        let jac = jacobian(model, &fk);
        let n = jac.len();
        let e = [e_p.x, e_p.y, e_p.z, e_r.x, e_r.y, e_r.z];

        // A = J Jᵀ + λ² I (m×m), shared by the task solve and the nullspace
        // projection below.
        let mut a = [[0.0; 6]; 6];
        for r in 0..m {
            for c in 0..m {
                let mut s = 0.0;
                for col in jac.iter().take(n) {
                    s += col[r] * col[c];
                }
                a[r][c] = s;
            }
            a[r][r] += params.lambda * params.lambda;
        }
        let mut a_task = a;
        let mut y = [0.0; 6];
        y[..m].copy_from_slice(&e[..m]);
        if solve_small(&mut a_task, &mut y, m).is_none() {
            break;
        }
        for (i, col) in jac.iter().enumerate() {
            let mut dq = 0.0;
            for r in 0..m {
                dq += col[r] * y[r];
            }
            q[i] += dq;
        }
        if let Some((q_ref, gain)) = posture {
            if q_ref.len() == n {
                // v - J#(Jv) leaves the task residual untouched to first
                // order, so the pull only absorbs redundant motion.
                let mut v: Vec<f64> =
                    (0..n).map(|i| gain * (q_ref[i] - q[i])).collect();
                let mut w = [0.0; 6];
                for r in 0..m {
                    for (i, col) in jac.iter().enumerate() {
                        w[r] += col[r] * v[i];
                    }
                }
                if solve_small(&mut a, &mut w, m).is_some() {
                    for (i, col) in jac.iter().enumerate() {
                        let mut back = 0.0;
                        for r in 0..m {
                            back += col[r] * w[r];
                        }
                        v[i] -= back;
                        q[i] += v[i];
                    }
                }
            }
        }
        model.clamp_q(&mut q);
    }
    Err(RobotError::IkNoConverge {
        pos_err,
        rot_err,
        iterations: params.max_iters,
    })
}

/// The bundled default robot: planar base, vertical lift, telescoping arm,
/// yaw/pitch/roll wrist, downward-pointing tool at home.
pub fn bundled_stretch_like() -> &'static str {
    include_str!("../fixtures/robots/stretch_like.robot")
}

/// Two-revolute planar test arm with a frozen base, for IK cross-checks.
pub fn bundled_planar_2r() -> &'static str {
    include_str!("../fixtures/robots/planar_2r.robot")
}
