//! Tokenizer for motion programs.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{MotionError, Span};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Number(f64),
    Ident(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Equals,
    Plus,
    Minus,
    Star,
    Slash,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(source: &str) -> Result<Vec<Token>, MotionError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    let err = |line, col, message: String| MotionError::Syntax {
        span: Span { line, col },
        message,
    };

    while i < bytes.len() {
        let c = bytes[i];
        let span = Span { line, col };
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            b' ' | b'\t' | b'\r' => {
                i += 1;
                col += 1;
            }
            b'(' | b')' | b',' | b';' | b'=' | b'+' | b'-' | b'*' | b'/' => {
                let tok = match c {
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    b',' => Tok::Comma,
                    b';' => Tok::Semi,
                    b'=' => Tok::Equals,
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'*' => Tok::Star,
                    _ => Tok::Slash,
                };
                tokens.push(Token { tok, span });
                i += 1;
                col += 1;
            }
            b'"' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j] != b'"' && bytes[j] != b'\n' {
                    j += 1;
                }
                if j >= bytes.len() || bytes[j] == b'\n' {
                    return Err(err(line, col, "unterminated string literal".to_string()));
                }
                let text = core::str::from_utf8(&bytes[start..j])
                    .map_err(|_| err(line, col, "invalid UTF-8 in string".to_string()))?;
                tokens.push(Token {
                    tok: Tok::Str(text.to_string()),
                    span,
                });
                col += (j + 1 - i) as u32;
                i = j + 1;
            }
            b'0'..=b'9' => {
                let start = i;
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    j += 1;
                    if j >= bytes.len() || !bytes[j].is_ascii_digit() {
                        return Err(err(
                            line,
                            col,
                            "digits required after decimal point".to_string(),
                        ));
                    }
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        j = k;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let text = core::str::from_utf8(&bytes[start..j]).unwrap();
                let value: f64 = text
                    .parse()
                    .map_err(|_| err(line, col, format!("invalid number {text}")))?;
                tokens.push(Token {
                    tok: Tok::Number(value),
                    span,
                });
                col += (j - start) as u32;
                i = j;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                let text = core::str::from_utf8(&bytes[start..j]).unwrap();
                tokens.push(Token {
                    tok: Tok::Ident(text.to_string()),
                    span,
                });
                col += (j - start) as u32;
                i = j;
            }
            other => {
                return Err(err(
                    line,
                    col,
                    format!("unexpected character {:?}", other as char),
                ));
            }
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_a_statement_with_spans() {
        let toks = lex("let p = joint(\"left_wrist\");").unwrap();
        assert_eq!(toks.len(), 8);
        assert_eq!(toks[0].tok, Tok::Ident("let".to_string()));
        assert_eq!(toks[3].tok, Tok::Ident("joint".to_string()));
        assert_eq!(toks[5].tok, Tok::Str("left_wrist".to_string()));
        assert_eq!(toks[5].span.col, 15);
        assert_eq!(toks[0].span.line, 1);
    }

    #[test]
    fn numbers_with_fraction_and_exponent() {
        let toks = lex("0.25 3 1.5e-2").unwrap();
        assert_eq!(toks[0].tok, Tok::Number(0.25));
        assert_eq!(toks[1].tok, Tok::Number(3.0));
        assert_eq!(toks[2].tok, Tok::Number(0.015));
    }

    #[test]
    fn line_numbers_advance() {
        let toks = lex("a\nb\n  c").unwrap();
        assert_eq!(toks[1].span, Span { line: 2, col: 1 });
        assert_eq!(toks[2].span, Span { line: 3, col: 3 });
    }

    #[test]
    fn unterminated_string_is_rejected() {
        assert!(matches!(
            lex("joint(\"left"),
            Err(MotionError::Syntax { .. })
        ));
    }

    #[test]
    fn unexpected_character_is_rejected() {
        let err = lex("let p = 3 % 4;").unwrap_err();
        match err {
            MotionError::Syntax { span, .. } => assert_eq!(span.col, 11),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trailing_dot_requires_digits() {
        assert!(lex("3.").is_err());
    }
}
