//! Deterministic interpreter. Statements run in order; `rand` consumes a
//! SplitMix64 stream in evaluation order (arguments left to right).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    BasePlacement, BinOp, Expr, Func, GroundingContext, MotionError, MotionProgram,
    ProgramKind, Span, Stmt, Trajectory, Waypoint,
};
use crate::body::joint_position;
use crate::math::{atan2, look_rotation, vec3, Quat, Vec3};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug)]
enum Value {
    Scalar(f64),
    Vec3(Vec3),
    Quat(Quat),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Vec3(_) => "vec3",
            Value::Quat(_) => "quaternion",
        }
    }
}

#[derive(Clone, Debug)]
pub enum EvalOutput {
    Trajectory(Trajectory),
    Base(BasePlacement),
}

struct Interp<'a, 'c> {
    ctx: &'a GroundingContext<'c>,
    env: BTreeMap<String, Value>,
    rng: SplitMix64,
}

fn rt(span: Span, message: impl Into<String>) -> MotionError {
    MotionError::RuntimeType {
        span,
        message: message.into(),
    }
}

impl<'a, 'c> Interp<'a, 'c> {
    fn scalar(&mut self, e: &Expr) -> Result<f64, MotionError> {
        match self.eval(e)? {
            Value::Scalar(s) => Ok(s),
            v => Err(rt(e.span(), format!("expected scalar, got {}", v.kind()))),
        }
    }

    fn vector(&mut self, e: &Expr) -> Result<Vec3, MotionError> {
        match self.eval(e)? {
            Value::Vec3(v) => Ok(v),
            v => Err(rt(e.span(), format!("expected vec3, got {}", v.kind()))),
        }
    }

    fn quat(&mut self, e: &Expr) -> Result<Quat, MotionError> {
        match self.eval(e)? {
            Value::Quat(q) => Ok(q),
            v => Err(rt(
                e.span(),
                format!("expected quaternion, got {}", v.kind()),
            )),
        }
    }

    /// Index of the cloud point nearest to `p`; ties resolved to the lowest
    /// index by strict comparison.
    fn nearest_index(&self, p: Vec3, span: Span) -> Result<usize, MotionError> {
        if self.ctx.cloud.is_empty() {
            return Err(MotionError::EmptyCloud { span });
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.ctx.cloud.iter().enumerate() {
            let d = (*q - p).norm_squared();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(best)
    }

    fn eval(&mut self, expr: &Expr) -> Result<Value, MotionError> {
        match expr {
            Expr::Number(n, _) => Ok(Value::Scalar(*n)),
            Expr::Ident(name, span) => self
                .env
                .get(name)
                .copied()
                .ok_or_else(|| rt(*span, format!("unbound variable {name}"))),
            Expr::JointName(_, span) => {
                Err(rt(*span, "joint name used as a value"))
            }
            Expr::Neg(inner, span) => match self.eval(inner)? {
                Value::Scalar(s) => Ok(Value::Scalar(-s)),
                Value::Vec3(v) => Ok(Value::Vec3(-v)),
                Value::Quat(_) => Err(rt(*span, "cannot negate a quaternion")),
            },
            Expr::Binary { op, lhs, rhs, span } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                match (op, a, b) {
                    (BinOp::Add, Value::Scalar(x), Value::Scalar(y)) => {
                        Ok(Value::Scalar(x + y))
                    }
                    (BinOp::Add, Value::Vec3(x), Value::Vec3(y)) => Ok(Value::Vec3(x + y)),
                    (BinOp::Sub, Value::Scalar(x), Value::Scalar(y)) => {
                        Ok(Value::Scalar(x - y))
                    }
                    (BinOp::Sub, Value::Vec3(x), Value::Vec3(y)) => Ok(Value::Vec3(x - y)),
                    (BinOp::Mul, Value::Scalar(x), Value::Scalar(y)) => {
                        Ok(Value::Scalar(x * y))
                    }
                    (BinOp::Mul, Value::Vec3(x), Value::Scalar(y)) => Ok(Value::Vec3(x * y)),
                    (BinOp::Mul, Value::Scalar(x), Value::Vec3(y)) => Ok(Value::Vec3(y * x)),
                    (BinOp::Div, Value::Scalar(x), Value::Scalar(y)) => {
                        Ok(Value::Scalar(x / y))
                    }
                    (BinOp::Div, Value::Vec3(x), Value::Scalar(y)) => Ok(Value::Vec3(x / y)),
                    (op, a, b) => Err(rt(
                        *span,
                        format!(
                            "operator {} cannot combine {} and {}",
                            op.symbol(),
                            a.kind(),
                            b.kind()
                        ),
                    )),
                }
            }
            Expr::Call { func, args, span } => self.call(*func, args, *span),
        }
    }

    fn call(&mut self, func: Func, args: &[Expr], span: Span) -> Result<Value, MotionError> {
        match func {
            Func::Vec3 => {
                let x = self.scalar(&args[0])?;
                let y = self.scalar(&args[1])?;
                let z = self.scalar(&args[2])?;
                Ok(Value::Vec3(vec3(x, y, z)))
            }
            Func::Joint => {
                let name = match &args[0] {
                    Expr::JointName(name, _) => name,
                    _ => return Err(rt(span, "joint takes a string literal")),
                };
                let p = joint_position(self.ctx.posed, name)
                    .map_err(|e| rt(span, e.to_string()))?;
                Ok(Value::Vec3(p))
            }
            Func::Surface => {
                let p = self.vector(&args[0])?;
                let i = self.nearest_index(p, span)?;
                Ok(Value::Vec3(self.ctx.cloud[i]))
            }
            Func::NormalAt => {
                let p = self.vector(&args[0])?;
                let i = self.nearest_index(p, span)?;
                Ok(Value::Vec3(self.ctx.normals[i]))
            }
            Func::CameraPos => Ok(Value::Vec3(self.ctx.camera.trans)),
            Func::Lerp => {
                let a = self.vector(&args[0])?;
                let b = self.vector(&args[1])?;
                let t = self.scalar(&args[2])?;
                Ok(Value::Vec3(a.lerp(b, t)))
            }
            Func::Unit => {
                let v = self.vector(&args[0])?;
                v.try_normalized()
                    .map(Value::Vec3)
                    .ok_or_else(|| rt(span, "unit() of a zero-length vector"))
            }
            Func::Norm => Ok(Value::Scalar(self.vector(&args[0])?.norm())),
            Func::Cross => {
                let a = self.vector(&args[0])?;
                let b = self.vector(&args[1])?;
                Ok(Value::Vec3(a.cross(b)))
            }
            Func::Dot => {
                let a = self.vector(&args[0])?;
                let b = self.vector(&args[1])?;
                Ok(Value::Scalar(a.dot(b)))
            }
            Func::Rand => {
                let lo = self.scalar(&args[0])?;
                let hi = self.scalar(&args[1])?;
                if !(lo <= hi) {
                    return Err(rt(span, format!("rand bounds out of order: {lo} > {hi}")));
                }
                Ok(Value::Scalar(self.rng.uniform(lo, hi)))
            }
            Func::LookAt => {
                let dir = self.vector(&args[0])?;
                let up = self.vector(&args[1])?;
                if dir.try_normalized().is_none() {
                    return Err(rt(span, "look_at() with a zero direction"));
                }
                Ok(Value::Quat(look_rotation(dir, up)))
            }
            Func::AxisAngle => {
                let axis = self.vector(&args[0])?;
                let angle = self.scalar(&args[1])?;
                let unit = axis
                    .try_normalized()
                    .ok_or_else(|| rt(span, "axis_angle() with a zero axis"))?;
                Ok(Value::Quat(Quat::from_axis_angle(unit, angle)))
            }
        }
    }
}

/// Runs a checked program against a grounding context. Trajectory programs
/// yield waypoints plus the target point; placement programs yield a planar
/// base pose (position z is ignored, yaw from the horizontal facing).
pub fn eval_program(
    prog: &MotionProgram,
    ctx: &GroundingContext<'_>,
    seed: u64,
) -> Result<EvalOutput, MotionError> {
    let mut interp = Interp {
        ctx,
        env: BTreeMap::new(),
        rng: SplitMix64::new(seed),
    };
    let mut waypoints: Vec<Waypoint> = Vec::new();
    let mut target: Option<Vec3> = None;
    let mut base: Option<BasePlacement> = None;

    for stmt in &prog.stmts {
        match stmt {
            Stmt::Let { name, value, .. } => {
                let v = interp.eval(value)?;
                interp.env.insert(name.clone(), v);
            }
            Stmt::Waypoint {
                position,
                orientation,
                speed,
                contact,
                planner,
                span,
            } => {
                let position = interp.vector(position)?;
                let orientation = interp.quat(orientation)?.renormalized();
                let speed = interp.scalar(speed)?;
                if !(speed > 0.0) {
                    return Err(MotionError::InvalidWaypoint {
                        span: *span,
                        message: format!("speed must be positive, got {speed}"),
                    });
                }
                if !position.is_finite() {
                    return Err(MotionError::InvalidWaypoint {
                        span: *span,
                        message: "position is not finite".to_string(),
                    });
                }
                waypoints.push(Waypoint {
                    position,
                    orientation,
                    speed,
                    contact: *contact,
                    planner: *planner,
                });
            }
            Stmt::Target { position, span } => {
                let p = interp.vector(position)?;
                if !p.is_finite() {
                    return Err(MotionError::InvalidWaypoint {
                        span: *span,
                        message: "target point is not finite".to_string(),
                    });
                }
                target = Some(p);
            }
            Stmt::Base {
                position,
                facing,
                span,
            } => {
                let p = interp.vector(position)?;
                let f = interp.vector(facing)?;
                let horiz = vec3(f.x, f.y, 0.0);
                if horiz.norm_squared() < 1e-12 {
                    return Err(rt(*span, "base facing has no horizontal component"));
                }
                base = Some(BasePlacement {
                    x: p.x,
                    y: p.y,
                    yaw: atan2(f.y, f.x),
                });
            }
        }
    }

    match prog.kind {
        ProgramKind::Trajectory => Ok(EvalOutput::Trajectory(Trajectory {
            waypoints,
            target_point: target.expect("structure check guarantees one target"),
            seed,
        })),
        ProgramKind::Placement => Ok(EvalOutput::Base(
            base.expect("structure check guarantees one base"),
        )),
    }
}
