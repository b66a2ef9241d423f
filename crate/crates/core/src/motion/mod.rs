//! The motion-program language: a small sandboxed DSL whose programs turn
//! grounded human-body queries into end-effector waypoint trajectories or a
//! robot base placement.
//!
//! Grammar (EBNF, normative):
//! ```text
//! program   = { stmt } ;
//! stmt      = "let" IDENT "=" expr ";"
//!           | "waypoint" "(" expr "," expr "," expr "," bool "," planner ")" ";"
//!           | "target" "(" expr ")" ";"
//!           | "base" "(" expr "," expr ")" ";" ;
//! planner   = "rrt" | "cartesian" ;
//! expr      = term { ("+"|"-") term } ;
//! term      = factor { ("*"|"/") factor } ;
//! factor    = NUMBER | IDENT | call | "(" expr ")" | "-" factor ;
//! call      = FNAME "(" [ expr { "," expr } ] ")" ;
//! FNAME     = "vec3" | "joint" | "surface" | "normal_at" | "camera_pos"
//!           | "lerp" | "unit" | "norm" | "cross" | "dot" | "rand"
//!           | "look_at" | "axis_angle" ;
//! bool      = "true" | "false" ;
//! ```
//! String literals appear in exactly one place: the argument of `joint`.
//!
//! Programs with a `base` statement are placement programs (exactly one
//! `base`, no waypoints or target); all others are trajectory programs
//! (at least one `waypoint`, exactly one `target`).
//!
//! Positions may never be world-absolute: every expression used as a
//! waypoint, target, or base position must data-flow from at least one
//! grounding call (`joint`, `surface`, `normal_at`, `camera_pos`).
//!
//! Evaluation is deterministic: `rand` draws from a SplitMix64 stream seeded
//! per evaluation, consumed in statement order, left to right within a
//! statement.

mod check;
mod eval;
mod lex;
mod parse;

pub use check::{check_program, CheckReport, Finding};
pub use eval::{eval_program, EvalOutput};
pub use parse::{parse_program, pretty_print};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::body::PosedHuman;
use crate::math::{Iso3, Quat, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    /// 1-based source line.
    pub line: u32,
    /// 1-based byte column.
    pub col: u32,
}

impl core::fmt::Display for Span {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Planner {
    Rrt,
    Cartesian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProgramKind {
    Trajectory,
    Placement,
}

/// Built-in functions, the complete sandbox API.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Vec3,
    Joint,
    Surface,
    NormalAt,
    CameraPos,
    Lerp,
    Unit,
    Norm,
    Cross,
    Dot,
    Rand,
    LookAt,
    AxisAngle,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "vec3" => Func::Vec3,
            "joint" => Func::Joint,
            "surface" => Func::Surface,
            "normal_at" => Func::NormalAt,
            "camera_pos" => Func::CameraPos,
            "lerp" => Func::Lerp,
            "unit" => Func::Unit,
            "norm" => Func::Norm,
            "cross" => Func::Cross,
            "dot" => Func::Dot,
            "rand" => Func::Rand,
            "look_at" => Func::LookAt,
            "axis_angle" => Func::AxisAngle,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Vec3 => "vec3",
            Func::Joint => "joint",
            Func::Surface => "surface",
            Func::NormalAt => "normal_at",
            Func::CameraPos => "camera_pos",
            Func::Lerp => "lerp",
            Func::Unit => "unit",
            Func::Norm => "norm",
            Func::Cross => "cross",
            Func::Dot => "dot",
            Func::Rand => "rand",
            Func::LookAt => "look_at",
            Func::AxisAngle => "axis_angle",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Func::CameraPos => 0,
            Func::Joint | Func::Surface | Func::NormalAt | Func::Unit | Func::Norm => 1,
            Func::Cross | Func::Dot | Func::Rand | Func::LookAt | Func::AxisAngle => 2,
            Func::Vec3 | Func::Lerp => 3,
        }
    }

    /// Whether results of this call are considered grounded in the observed
    /// human for the position taint rule.
    pub fn is_grounding(&self) -> bool {
        matches!(
            self,
            Func::Joint | Func::Surface | Func::NormalAt | Func::CameraPos
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Expr {
    Number(f64, Span),
    Ident(String, Span),
    /// String literal; the grammar admits it only as the argument of `joint`.
    JointName(String, Span),
    Call {
        func: Func,
        args: Vec<Expr>,
        span: Span,
    },
    Neg(alloc::boxed::Box<Expr>, Span),
    Binary {
        op: BinOp,
        lhs: alloc::boxed::Box<Expr>,
        rhs: alloc::boxed::Box<Expr>,
        span: Span,
    },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Number(_, s)
            | Expr::Ident(_, s)
            | Expr::JointName(_, s)
            | Expr::Call { span: s, .. }
            | Expr::Neg(_, s)
            | Expr::Binary { span: s, .. } => *s,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Stmt {
    Let {
        name: String,
        value: Expr,
        span: Span,
    },
    Waypoint {
        position: Expr,
        orientation: Expr,
        speed: Expr,
        contact: bool,
        planner: Planner,
        span: Span,
    },
    Target {
        position: Expr,
        span: Span,
    },
    Base {
        position: Expr,
        facing: Expr,
        span: Span,
    },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Let { span, .. }
            | Stmt::Waypoint { span, .. }
            | Stmt::Target { span, .. }
            | Stmt::Base { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MotionProgram {
    pub source: String,
    pub stmts: Vec<Stmt>,
    pub kind: ProgramKind,
}

#[derive(Debug, thiserror::Error)]
pub enum MotionError {
    #[error("syntax error at {span}: {message}")]
    Syntax { span: Span, message: String },
    #[error("unknown function at {span}: {name}")]
    UnknownFunction { span: Span, name: String },
    #[error("arity error at {span}: {name} takes {expected} arguments, got {got}")]
    Arity {
        span: Span,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid program structure: {message}")]
    Structure { message: String },
    #[error("type error at {span}: {message}")]
    Type { span: Span, message: String },
    #[error("ungrounded position at {span}: no dataflow from any grounding call")]
    Ungrounded { span: Span },
    #[error("program too large: {count} statements (limit {limit})")]
    TooLarge { count: usize, limit: usize },
    #[error("runtime type error at {span}: {message}")]
    RuntimeType { span: Span, message: String },
    #[error("surface query at {span} with an empty point cloud")]
    EmptyCloud { span: Span },
    #[error("invalid waypoint at {span}: {message}")]
    InvalidWaypoint { span: Span, message: String },
}

impl MotionError {
    pub fn code(&self) -> &'static str {
        match self {
            MotionError::Syntax { .. } => "syntax_error",
            MotionError::UnknownFunction { .. } => "unknown_function",
            MotionError::Arity { .. } => "arity_error",
            MotionError::Structure { .. } => "structure_error",
            MotionError::Type { .. } => "type_error",
            MotionError::Ungrounded { .. } => "ungrounded_position",
            MotionError::TooLarge { .. } => "program_too_large",
            MotionError::RuntimeType { .. } => "runtime_type_error",
            MotionError::EmptyCloud { .. } => "empty_cloud",
            MotionError::InvalidWaypoint { .. } => "invalid_waypoint",
        }
    }
}

pub const MAX_STATEMENTS: usize = 256;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: Vec3,
    pub orientation: Quat,
    pub speed: f64,
    pub contact: bool,
    pub planner: Planner,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    pub target_point: Vec3,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BasePlacement {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Read-only world view the interpreter grounds programs in.
pub struct GroundingContext<'a> {
    pub posed: &'a PosedHuman,
    pub cloud: &'a [Vec3],
    pub normals: &'a [Vec3],
    pub camera: Iso3,
}

impl<'a> GroundingContext<'a> {
    pub fn new(
        posed: &'a PosedHuman,
        cloud: &'a [Vec3],
        normals: &'a [Vec3],
        camera: Iso3,
    ) -> GroundingContext<'a> {
        assert_eq!(
            cloud.len(),
            normals.len(),
            "cloud and normals must be parallel arrays"
        );
        GroundingContext {
            posed,
            cloud,
            normals,
            camera,
        }
    }
}

/// Bundled reference programs: (name, source). Two trajectory tasks and one
/// base placement.
pub fn reference_programs() -> [(&'static str, &'static str); 3] {
    [
        ("scratch", include_str!("../../fixtures/scratch.mp")),
        ("bathe", include_str!("../../fixtures/bathe.mp")),
        ("place_left", include_str!("../../fixtures/place_left.mp")),
    ]
}

/// Bundled fault-injection programs for validator tests: each one compiles
/// but violates a documented safety criterion at execution time.
pub fn fault_programs() -> [(&'static str, &'static str); 3] {
    [
        (
            "bad_rrt_contact",
            include_str!("../../fixtures/bad_rrt_contact.mp"),
        ),
        (
            "bad_low_contact",
            include_str!("../../fixtures/bad_low_contact.mp"),
        ),
        (
            "bad_incidental",
            include_str!("../../fixtures/bad_incidental.mp"),
        ),
    ]
}
