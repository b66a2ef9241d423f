//! Recursive-descent parser and the canonical pretty-printer.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::lex::{lex, Tok, Token};
use super::{
    BinOp, Expr, Func, MotionError, MotionProgram, Planner, ProgramKind, Span, Stmt,
};

const KEYWORDS: [&str; 8] = [
    "let",
    "waypoint",
    "target",
    "base",
    "true",
    "false",
    "rrt",
    "cartesian",
];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn span_here(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or_else(|| {
            self.tokens
                .last()
                .map(|t| t.span)
                .unwrap_or(Span { line: 1, col: 1 })
        })
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, message: impl Into<String>) -> MotionError {
        MotionError::Syntax {
            span: self.span_here(),
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Span, MotionError> {
        match self.peek() {
            Some(t) if t.tok == tok => Ok(self.bump().unwrap().span),
            Some(t) => Err(MotionError::Syntax {
                span: t.span,
                message: format!("expected {what}, found {:?}", t.tok),
            }),
            None => Err(self.syntax(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Span), MotionError> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Ident(name),
                span,
            }) => {
                self.bump();
                Ok((name, span))
            }
            Some(t) => Err(MotionError::Syntax {
                span: t.span,
                message: format!("expected {what}, found {:?}", t.tok),
            }),
            None => Err(self.syntax(format!("expected {what}, found end of input"))),
        }
    }

    fn parse_program(&mut self) -> Result<Vec<Stmt>, MotionError> {
        let mut stmts = Vec::new();
        while self.peek().is_some() {
            stmts.push(self.parse_stmt()?);
        }
        Ok(stmts)
    }

    fn parse_stmt(&mut self) -> Result<Stmt, MotionError> {
        let (word, span) = self.expect_ident("a statement keyword")?;
        match word.as_str() {
            "let" => {
                let (name, name_span) = self.expect_ident("a variable name")?;
                if KEYWORDS.contains(&name.as_str()) || Func::from_name(&name).is_some() {
                    return Err(MotionError::Syntax {
                        span: name_span,
                        message: format!("{name} is reserved and cannot be bound"),
                    });
                }
                self.expect(Tok::Equals, "=")?;
                let value = self.parse_expr()?;
                self.expect(Tok::Semi, ";")?;
                Ok(Stmt::Let { name, value, span })
            }
            "waypoint" => {
                self.expect(Tok::LParen, "(")?;
                let position = self.parse_expr()?;
                self.expect(Tok::Comma, ",")?;
                let orientation = self.parse_expr()?;
                self.expect(Tok::Comma, ",")?;
                let speed = self.parse_expr()?;
                self.expect(Tok::Comma, ",")?;
                let contact = self.parse_bool()?;
                self.expect(Tok::Comma, ",")?;
                let planner = self.parse_planner()?;
                self.expect(Tok::RParen, ")")?;
                self.expect(Tok::Semi, ";")?;
                Ok(Stmt::Waypoint {
                    position,
                    orientation,
                    speed,
                    contact,
                    planner,
                    span,
                })
            }
            "target" => {
                self.expect(Tok::LParen, "(")?;
                let position = self.parse_expr()?;
                self.expect(Tok::RParen, ")")?;
                self.expect(Tok::Semi, ";")?;
                Ok(Stmt::Target { position, span })
            }
            "base" => {
                self.expect(Tok::LParen, "(")?;
                let position = self.parse_expr()?;
                self.expect(Tok::Comma, ",")?;
                let facing = self.parse_expr()?;
                self.expect(Tok::RParen, ")")?;
                self.expect(Tok::Semi, ";")?;
                Ok(Stmt::Base {
                    position,
                    facing,
                    span,
                })
            }
            other => Err(MotionError::Syntax {
                span,
                message: format!("expected let, waypoint, target, or base, found {other}"),
            }),
        }
    }

    fn parse_bool(&mut self) -> Result<bool, MotionError> {
        let (word, span) = self.expect_ident("true or false")?;
        match word.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(MotionError::Syntax {
                span,
                message: format!("expected true or false, found {other}"),
            }),
        }
    }

    fn parse_planner(&mut self) -> Result<Planner, MotionError> {
        let (word, span) = self.expect_ident("rrt or cartesian")?;
        match word.as_str() {
            "rrt" => Ok(Planner::Rrt),
            "cartesian" => Ok(Planner::Cartesian),
            other => Err(MotionError::Syntax {
                span,
                message: format!("expected rrt or cartesian, found {other}"),
            }),
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, MotionError> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek().map(|t| &t.tok) {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            let span = self.bump().unwrap().span;
            let rhs = self.parse_term()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Expr, MotionError> {
        let mut lhs = self.parse_factor()?;
        loop {
            let op = match self.peek().map(|t| &t.tok) {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            let span = self.bump().unwrap().span;
            let rhs = self.parse_factor()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_factor(&mut self) -> Result<Expr, MotionError> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Number(n),
                span,
            }) => {
                self.bump();
                Ok(Expr::Number(n, span))
            }
            Some(Token {
                tok: Tok::Minus,
                span,
            }) => {
                self.bump();
                let inner = self.parse_factor()?;
                Ok(Expr::Neg(Box::new(inner), span))
            }
            Some(Token {
                tok: Tok::LParen, ..
            }) => {
                self.bump();
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen, ")")?;
                Ok(inner)
            }
            Some(Token {
                tok: Tok::Str(_),
                span,
            }) => Err(MotionError::Syntax {
                span,
                message: "string literals are only valid as the argument of joint()"
                    .to_string(),
            }),
            Some(Token {
                tok: Tok::Ident(name),
                span,
            }) => {
                self.bump();
                let is_call = matches!(
                    self.peek(),
                    Some(Token {
                        tok: Tok::LParen,
                        ..
                    })
                );
                if is_call {
                    let func = Func::from_name(&name).ok_or(MotionError::UnknownFunction {
                        span,
                        name: name.clone(),
                    })?;
                    self.bump();
                    let args = self.parse_call_args(func, span)?;
                    Ok(Expr::Call { func, args, span })
                } else {
                    if KEYWORDS.contains(&name.as_str()) {
                        return Err(MotionError::Syntax {
                            span,
                            message: format!("{name} is not valid in an expression"),
                        });
                    }
                    Ok(Expr::Ident(name, span))
                }
            }
            Some(t) => Err(MotionError::Syntax {
                span: t.span,
                message: format!("expected an expression, found {:?}", t.tok),
            }),
            None => Err(self.syntax("expected an expression, found end of input")),
        }
    }

    fn parse_call_args(&mut self, func: Func, span: Span) -> Result<Vec<Expr>, MotionError> {
        if func == Func::Joint {
            let arg = match self.peek().cloned() {
                Some(Token {
                    tok: Tok::Str(name),
                    span,
                }) => {
                    self.bump();
                    Expr::JointName(name, span)
                }
                Some(t) => {
                    return Err(MotionError::Syntax {
                        span: t.span,
                        message: "joint name must be a string literal".to_string(),
                    })
                }
                None => return Err(self.syntax("expected a joint name string")),
            };
            self.expect(Tok::RParen, ")")?;
            return Ok(alloc::vec![arg]);
        }

        let mut args = Vec::new();
        if matches!(
            self.peek(),
            Some(Token {
                tok: Tok::RParen,
                ..
            })
        ) {
            self.bump();
        } else {
            loop {
                args.push(self.parse_expr()?);
                match self.peek().map(|t| &t.tok) {
                    Some(Tok::Comma) => {
                        self.bump();
                    }
                    Some(Tok::RParen) => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.syntax("expected , or ) in argument list")),
                }
            }
        }
        if args.len() != func.arity() {
            return Err(MotionError::Arity {
                span,
                name: func.name().to_string(),
                expected: func.arity(),
                got: args.len(),
            });
        }
        Ok(args)
    }
}

/// Classifies and validates statement structure, yielding the program kind.
fn classify(stmts: &[Stmt]) -> Result<ProgramKind, MotionError> {
    let structure = |message: &str| MotionError::Structure {
        message: message.to_string(),
    };
    if stmts.is_empty() {
        return Err(structure("program has no statements"));
    }
    let waypoints = stmts
        .iter()
        .filter(|s| matches!(s, Stmt::Waypoint { .. }))
        .count();
    let targets = stmts
        .iter()
        .filter(|s| matches!(s, Stmt::Target { .. }))
        .count();
    let bases = stmts
        .iter()
        .filter(|s| matches!(s, Stmt::Base { .. }))
        .count();
    if bases > 0 {
        if bases != 1 {
            return Err(structure("placement programs need exactly one base statement"));
        }
        if waypoints != 0 || targets != 0 {
            return Err(structure(
                "placement programs cannot contain waypoint or target statements",
            ));
        }
        Ok(ProgramKind::Placement)
    } else {
        if waypoints == 0 {
            return Err(structure(
                "trajectory programs need at least one waypoint statement",
            ));
        }
        if targets != 1 {
            return Err(structure(
                "trajectory programs need exactly one target statement",
            ));
        }
        Ok(ProgramKind::Trajectory)
    }
}

pub fn parse_program(source: &str) -> Result<MotionProgram, MotionError> {
    let tokens = lex(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let stmts = parser.parse_program()?;
    let kind = classify(&stmts)?;
    Ok(MotionProgram {
        source: source.to_string(),
        stmts,
        kind,
    })
}

fn print_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Number(n, _) => {
            out.push_str(&format_number(*n));
        }
        Expr::Ident(name, _) => out.push_str(name),
        Expr::JointName(name, _) => {
            out.push('"');
            out.push_str(name);
            out.push('"');
        }
        Expr::Call { func, args, .. } => {
            out.push_str(func.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(a, out);
            }
            out.push(')');
        }
        Expr::Neg(inner, _) => {
            out.push('-');
            match **inner {
                Expr::Binary { .. } => {
                    out.push('(');
                    print_expr(inner, out);
                    out.push(')');
                }
                _ => print_expr(inner, out),
            }
        }
        Expr::Binary { op, lhs, rhs, .. } => {
            out.push('(');
            print_expr(lhs, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            print_expr(rhs, out);
            out.push(')');
        }
    }
}

/// Formats a literal so it lexes back to exactly the same f64.
fn format_number(n: f64) -> String {
    if n == libm::trunc(n) && n.abs() < 1e15 {
        format!("{:.1}", n)
    } else {
        format!("{n}")
    }
}

/// Canonical source form: one statement per line, every binary operation
/// parenthesized. Reparsing the output yields an equivalent program.
pub fn pretty_print(prog: &MotionProgram) -> String {
    let mut out = String::new();
    for stmt in &prog.stmts {
        match stmt {
            Stmt::Let { name, value, .. } => {
                out.push_str("let ");
                out.push_str(name);
                out.push_str(" = ");
                print_expr(value, &mut out);
            }
            Stmt::Waypoint {
                position,
                orientation,
                speed,
                contact,
                planner,
                ..
            } => {
                out.push_str("waypoint(");
                print_expr(position, &mut out);
                out.push_str(", ");
                print_expr(orientation, &mut out);
                out.push_str(", ");
                print_expr(speed, &mut out);
                out.push_str(", ");
                out.push_str(if *contact { "true" } else { "false" });
                out.push_str(", ");
                out.push_str(match planner {
                    Planner::Rrt => "rrt",
                    Planner::Cartesian => "cartesian",
                });
                out.push(')');
            }
            Stmt::Target { position, .. } => {
                out.push_str("target(");
                print_expr(position, &mut out);
                out.push(')');
            }
            Stmt::Base {
                position, facing, ..
            } => {
                out.push_str("base(");
                print_expr(position, &mut out);
                out.push_str(", ");
                print_expr(facing, &mut out);
                out.push(')');
            }
        }
        out.push_str(";\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_trajectory_program_parses() {
        let src = "waypoint(joint(\"left_wrist\"), look_at(vec3(0.0, 0.0, -1.0), vec3(0.0, 1.0, 0.0)), 0.05, true, cartesian);\ntarget(joint(\"left_wrist\"));\n";
        let prog = parse_program(src).unwrap();
        assert_eq!(prog.kind, ProgramKind::Trajectory);
        assert_eq!(prog.stmts.len(), 2);
    }

    #[test]
    fn missing_target_is_a_structure_error() {
        let src = "waypoint(joint(\"left_wrist\"), look_at(vec3(0.0, 0.0, -1.0), vec3(0.0, 1.0, 0.0)), 0.05, true, cartesian);\n";
        let err = parse_program(src).unwrap_err();
        assert_eq!(err.code(), "structure_error");
    }

    #[test]
    fn bare_joint_name_is_a_syntax_error_with_location() {
        let err = parse_program("let p = joint(left_wrist);").unwrap_err();
        match err {
            MotionError::Syntax { span, message } => {
                assert_eq!(span.line, 1);
                assert_eq!(span.col, 15);
                assert!(message.contains("string literal"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn string_outside_joint_is_a_syntax_error() {
        let err = parse_program("let p = surface(\"left_wrist\"); target(p);").unwrap_err();
        assert_eq!(err.code(), "syntax_error");
    }

    #[test]
    fn unknown_function_and_arity_errors() {
        let err = parse_program("let p = fetch(1.0); target(p);").unwrap_err();
        assert_eq!(err.code(), "unknown_function");
        let err = parse_program("let p = lerp(vec3(0.0,0.0,0.0), 0.5); target(p);").unwrap_err();
        assert_eq!(err.code(), "arity_error");
    }

    #[test]
    fn placement_program_excludes_waypoints() {
        let src = "base(joint(\"pelvis\"), vec3(1.0, 0.0, 0.0));\ntarget(joint(\"pelvis\"));\n";
        let err = parse_program(src).unwrap_err();
        assert_eq!(err.code(), "structure_error");
        let ok = parse_program("base(joint(\"pelvis\"), vec3(1.0, 0.0, 0.0));\n").unwrap();
        assert_eq!(ok.kind, ProgramKind::Placement);
    }

    #[test]
    fn precedence_binds_term_tighter_than_sum() {
        let prog =
            parse_program("let x = 1.0 + 2.0 * 3.0;\nwaypoint(joint(\"neck\"), look_at(vec3(0.0,0.0,-1.0), vec3(0.0,1.0,0.0)), x, false, rrt);\ntarget(joint(\"neck\"));").unwrap();
        let printed = pretty_print(&prog);
        assert!(printed.contains("(1.0 + (2.0 * 3.0))"), "{printed}");
    }

    #[test]
    fn unary_minus_parses_in_factor_position() {
        let prog = parse_program(
            "let n = -joint(\"neck\") * -2.0;\nbase(n + joint(\"pelvis\"), -n);",
        )
        .unwrap();
        let printed = pretty_print(&prog);
        assert!(printed.contains("(-joint(\"neck\") * -2.0)"), "{printed}");
    }

    #[test]
    fn keywords_cannot_be_variable_names() {
        assert!(parse_program("let rrt = 1.0; target(joint(\"neck\"));").is_err());
        assert!(parse_program("let lerp = 1.0; target(joint(\"neck\"));").is_err());
    }

    #[test]
    fn empty_program_is_rejected() {
        assert_eq!(parse_program("").unwrap_err().code(), "structure_error");
    }
}
