use std::fmt;

use num_bigint::BigInt;

use super::{ParseError, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Dot,
    FatArrow,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    EqEq,
    Eq,
    Lt,
    At,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Dot => ".",
            Tok::FatArrow => "=>",
            Tok::Arrow => "->",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::EqEq => "==",
            Tok::Eq => "=",
            Tok::Lt => "<",
            Tok::At => "@",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Splits source text into tokens. `#` starts a comment running to the end
/// of the line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = Span {
            start: i,
            end: i,
            line,
            column: col,
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let len = src[i..]
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(src.len() - i);
            (Tok::Ident(src[i..i + len].to_string()), len)
        } else if c.is_ascii_digit() {
            let len = src[i..]
                .find(|ch: char| !ch.is_ascii_digit())
                .unwrap_or(src.len() - i);
            let n: BigInt = src[i..i + len].parse().expect("digits parse");
            (Tok::Int(n), len)
        } else {
            let two = src.get(i..i + 2).unwrap_or("");
            match two {
                "=>" => (Tok::FatArrow, 2),
                "->" => (Tok::Arrow, 2),
                "==" => (Tok::EqEq, 2),
                _ => {
                    let tok = match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        ',' => Tok::Comma,
                        ':' => Tok::Colon,
                        ';' => Tok::Semi,
                        '.' => Tok::Dot,
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '*' => Tok::Star,
                        '/' => Tok::Slash,
                        '=' => Tok::Eq,
                        '<' => Tok::Lt,
                        '@' => Tok::At,
                        other => {
                            return Err(ParseError::at(
                                start,
                                format!("unexpected character `{other}`"),
                            ));
                        }
                    };
                    (tok, 1)
                }
            }
        };
        out.push(Token {
            tok,
            span: Span {
                end: i + len,
                ..start
            },
        });
        i += len;
        col += len;
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span {
            start: i,
            end: i,
            line,
            column: col,
        },
    });
    Ok(out)
}
