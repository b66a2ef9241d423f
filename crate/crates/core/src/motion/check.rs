//! Static checks: call typing, the grounding taint rule for positions, and
//! the statement budget.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use super::{BinOp, Expr, Func, MotionError, MotionProgram, Span, Stmt, MAX_STATEMENTS};
use crate::body::QUERY_JOINTS;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Scalar,
    Vec3,
    Quat,
}

impl Ty {
    fn name(&self) -> &'static str {
        match self {
            Ty::Scalar => "scalar",
            Ty::Vec3 => "vec3",
            Ty::Quat => "quaternion",
        }
    }
}

/// Inferred value type plus whether the value's dataflow touched a
/// grounding call.
#[derive(Clone, Copy, Debug)]
struct Inferred {
    ty: Ty,
    grounded: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Finding {
    pub code: &'static str,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub statement_count: usize,
    pub findings: Vec<Finding>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.findings.is_empty()
    }

    /// The first finding as a hard error, for callers that need all-or-nothing.
    pub fn into_result(self) -> Result<(), MotionError> {
        match self.findings.into_iter().next() {
            None => Ok(()),
            Some(f) => Err(MotionError::Type {
                span: Span {
                    line: f.line,
                    col: f.col,
                },
                message: format!("{}: {}", f.code, f.message),
            }),
        }
    }
}

struct Checker {
    env: BTreeMap<String, Inferred>,
    findings: Vec<Finding>,
}

impl Checker {
    fn report(&mut self, err: &MotionError) {
        let (line, col) = match err {
            MotionError::Type { span, .. }
            | MotionError::Ungrounded { span }
            | MotionError::Syntax { span, .. } => (span.line, span.col),
            _ => (0, 0),
        };
        self.findings.push(Finding {
            code: err.code(),
            line,
            col,
            message: err.to_string(),
        });
    }

    fn type_error(&mut self, span: Span, message: String) -> Inferred {
        self.report(&MotionError::Type { span, message });
        // Recovery value so one mistake does not cascade.
        Inferred {
            ty: Ty::Scalar,
            grounded: true,
        }
    }

    fn infer(&mut self, expr: &Expr) -> Inferred {
        match expr {
            Expr::Number(..) => Inferred {
                ty: Ty::Scalar,
                grounded: false,
            },
            Expr::JointName(_, span) => {
                self.type_error(*span, "joint name used as a value".to_string())
            }
            Expr::Ident(name, span) => match self.env.get(name) {
                Some(i) => *i,
                None => {
                    let msg = format!("unbound variable {name}");
                    self.type_error(*span, msg)
                }
            },
            Expr::Neg(inner, span) => {
                let i = self.infer(inner);
                match i.ty {
                    Ty::Scalar | Ty::Vec3 => i,
                    Ty::Quat => {
                        self.type_error(*span, "cannot negate a quaternion".to_string())
                    }
                }
            }
            Expr::Binary { op, lhs, rhs, span } => {
                let a = self.infer(lhs);
                let b = self.infer(rhs);
                let grounded = a.grounded || b.grounded;
                let ty = match (op, a.ty, b.ty) {
                    (BinOp::Add | BinOp::Sub, Ty::Scalar, Ty::Scalar) => Some(Ty::Scalar),
                    (BinOp::Add | BinOp::Sub, Ty::Vec3, Ty::Vec3) => Some(Ty::Vec3),
                    (BinOp::Mul, Ty::Scalar, Ty::Scalar) => Some(Ty::Scalar),
                    (BinOp::Mul, Ty::Vec3, Ty::Scalar) | (BinOp::Mul, Ty::Scalar, Ty::Vec3) => {
                        Some(Ty::Vec3)
                    }
                    (BinOp::Div, Ty::Scalar, Ty::Scalar) => Some(Ty::Scalar),
                    (BinOp::Div, Ty::Vec3, Ty::Scalar) => Some(Ty::Vec3),
                    _ => None,
                };
                match ty {
                    Some(ty) => Inferred { ty, grounded },
                    None => {
                        let msg = format!(
                            "operator {} cannot combine {} and {}",
                            op.symbol(),
                            a.ty.name(),
                            b.ty.name()
                        );
                        self.type_error(*span, msg)
                    }
                }
            }
            Expr::Call { func, args, span } => self.infer_call(*func, args, *span),
        }
    }

    fn infer_call(&mut self, func: Func, args: &[Expr], _span: Span) -> Inferred {
        if func == Func::Joint {
            if let Some(Expr::JointName(name, name_span)) = args.first() {
                if !QUERY_JOINTS.contains(&name.as_str()) {
                    let msg = format!("unknown joint name \"{name}\"");
                    self.type_error(*name_span, msg);
                }
            }
            return Inferred {
                ty: Ty::Vec3,
                grounded: true,
            };
        }

        let expected: &[Ty] = match func {
            Func::Vec3 => &[Ty::Scalar, Ty::Scalar, Ty::Scalar],
            Func::Surface | Func::NormalAt | Func::Unit | Func::Norm => &[Ty::Vec3],
            Func::CameraPos => &[],
            Func::Lerp => &[Ty::Vec3, Ty::Vec3, Ty::Scalar],
            Func::Cross | Func::Dot | Func::LookAt => &[Ty::Vec3, Ty::Vec3],
            Func::Rand => &[Ty::Scalar, Ty::Scalar],
            Func::AxisAngle => &[Ty::Vec3, Ty::Scalar],
            Func::Joint => unreachable!(),
        };
        let mut grounded = func.is_grounding();
        for (arg, want) in args.iter().zip(expected) {
            let got = self.infer(arg);
            grounded |= got.grounded;
            if got.ty != *want {
                let msg = format!(
                    "{} expects {}, got {}",
                    func.name(),
                    want.name(),
                    got.ty.name()
                );
                self.type_error(arg.span(), msg);
            }
        }
        let ty = match func {
            Func::Norm | Func::Dot | Func::Rand => Ty::Scalar,
            Func::LookAt | Func::AxisAngle => Ty::Quat,
            _ => Ty::Vec3,
        };
        Inferred { ty, grounded }
    }

    fn require_grounded_position(&mut self, expr: &Expr, what: &str) {
        let i = self.infer(expr);
        if i.ty != Ty::Vec3 {
            let msg = format!("{what} must be a vec3, got {}", i.ty.name());
            self.type_error(expr.span(), msg);
            return;
        }
        if !i.grounded {
            self.report(&MotionError::Ungrounded { span: expr.span() });
        }
    }
}

pub fn check_program(prog: &MotionProgram) -> CheckReport {
    let mut checker = Checker {
        env: BTreeMap::new(),
        findings: Vec::new(),
    };

    if prog.stmts.len() > MAX_STATEMENTS {
        checker.report(&MotionError::TooLarge {
            count: prog.stmts.len(),
            limit: MAX_STATEMENTS,
        });
    }

    for stmt in &prog.stmts {
        match stmt {
            Stmt::Let { name, value, .. } => {
                let inferred = checker.infer(value);
                checker.env.insert(name.clone(), inferred);
            }
            Stmt::Waypoint {
                position,
                orientation,
                speed,
                ..
            } => {
                checker.require_grounded_position(position, "waypoint position");
                let o = checker.infer(orientation);
                if o.ty != Ty::Quat {
                    let msg = format!(
                        "waypoint orientation must be a quaternion, got {}",
                        o.ty.name()
                    );
                    checker.type_error(orientation.span(), msg);
                }
                let s = checker.infer(speed);
                if s.ty != Ty::Scalar {
                    let msg =
                        format!("waypoint speed must be a scalar, got {}", s.ty.name());
                    checker.type_error(speed.span(), msg);
                }
            }
            Stmt::Target { position, .. } => {
                checker.require_grounded_position(position, "target position");
            }
            Stmt::Base {
                position, facing, ..
            } => {
                checker.require_grounded_position(position, "base position");
                let f = checker.infer(facing);
                if f.ty != Ty::Vec3 {
                    let msg =
                        format!("base facing must be a vec3, got {}", f.ty.name());
                    checker.type_error(facing.span(), msg);
                }
            }
        }
    }

    CheckReport {
        statement_count: prog.stmts.len(),
        findings: checker.findings,
    }
}
