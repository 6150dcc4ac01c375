//! Text expressions for polynomial data.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := ('+' | '-') factor | base ('^' uint)?
//! base   := real | ident | '(' expr ')'
//! ```
//!
//! Unary signs are accepted at the start of a factor, so `-2*x` and `x*-y`
//! both parse. Exponents are non-negative integers no larger than
//! [`MAX_EXPONENT`].

use std::fmt;

use super::Polynomial;

/// Largest exponent accepted after `^`.
pub const MAX_EXPONENT: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownIdentifier(String),
    UnexpectedToken(String),
    UnexpectedEnd,
    BadNumber(String),
    BadExponent(String),
    ExponentTooLarge(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Byte offset into the source expression.
    pub position: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::UnknownIdentifier(s) => {
                write!(f, "unknown identifier '{s}' at position {}", self.position)
            }
            ParseErrorKind::UnexpectedToken(s) => {
                write!(f, "unexpected '{s}' at position {}", self.position)
            }
            ParseErrorKind::UnexpectedEnd => {
                write!(
                    f,
                    "unexpected end of expression at position {}",
                    self.position
                )
            }
            ParseErrorKind::BadNumber(s) => {
                write!(f, "malformed number '{s}' at position {}", self.position)
            }
            ParseErrorKind::BadExponent(s) => write!(
                f,
                "exponent must be a non-negative integer, got '{s}' at position {}",
                self.position
            ),
            ParseErrorKind::ExponentTooLarge(e) => write!(
                f,
                "exponent {e} exceeds the limit of {MAX_EXPONENT} at position {}",
                self.position
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Num(_, s) | Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // scientific suffix, only if followed by a digit (optionally signed)
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError {
                    position: start,
                    kind: ParseErrorKind::BadNumber(text.to_string()),
                })?;
                out.push((start, Tok::Num(v, text.to_string())));
                continue;
            }
            _ if c.is_alphabetic() || c == '_' => {
                while i < bytes.len() && ((bytes[i] as char).is_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            other => {
                return Err(ParseError {
                    position: start,
                    kind: ParseErrorKind::UnexpectedToken(other.to_string()),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

#[derive(Debug)]
enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn unexpected(&self) -> ParseError {
        match self.toks.get(self.pos) {
            Some((o, t)) => ParseError {
                position: *o,
                kind: ParseErrorKind::UnexpectedToken(t.text()),
            },
            None => ParseError {
                position: self.end,
                kind: ParseErrorKind::UnexpectedEnd,
            },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                return Ok(Expr::Neg(Box::new(self.factor()?)));
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                return self.factor();
            }
            _ => {}
        }
        let base = self.base()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let at = self.offset();
            return match self.toks.get(self.pos).cloned() {
                Some((_, Tok::Num(v, text))) => {
                    self.pos += 1;
                    if v.fract() != 0.0 || text.contains(['.', 'e', 'E']) {
                        return Err(ParseError {
                            position: at,
                            kind: ParseErrorKind::BadExponent(text),
                        });
                    }
                    if v > MAX_EXPONENT as f64 {
                        return Err(ParseError {
                            position: at,
                            kind: ParseErrorKind::ExponentTooLarge(v.min(u32::MAX as f64) as u32),
                        });
                    }
                    Ok(Expr::Pow(Box::new(base), v as u32))
                }
                Some((_, Tok::Minus)) => {
                    let mut text = String::from("-");
                    if let Some((_, t)) = self.toks.get(self.pos + 1) {
                        text.push_str(&t.text());
                    }
                    Err(ParseError {
                        position: at,
                        kind: ParseErrorKind::BadExponent(text),
                    })
                }
                Some((_, t)) => Err(ParseError {
                    position: at,
                    kind: ParseErrorKind::BadExponent(t.text()),
                }),
                None => Err(self.unexpected()),
            };
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let Some((off, tok)) = self.toks.get(self.pos).cloned() else {
            return Err(self.unexpected());
        };
        match tok {
            Tok::Num(v, _) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => match self.vars.iter().position(|v| *v == name) {
                Some(i) => {
                    self.pos += 1;
                    Ok(Expr::Var(i))
                }
                None => Err(ParseError {
                    position: off,
                    kind: ParseErrorKind::UnknownIdentifier(name),
                }),
            },
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(self.unexpected()),
                }
            }
            _ => Err(self.unexpected()),
        }
    }
}

fn expand(e: &Expr, nvars: usize) -> Polynomial {
    match e {
        Expr::Num(v) => Polynomial::constant(nvars, *v),
        Expr::Var(i) => Polynomial::var(nvars, *i),
        Expr::Neg(a) => expand(a, nvars).scale(-1.0),
        Expr::Add(a, b) => &expand(a, nvars) + &expand(b, nvars),
        Expr::Sub(a, b) => &expand(a, nvars) - &expand(b, nvars),
        Expr::Mul(a, b) => &expand(a, nvars) * &expand(b, nvars),
        Expr::Pow(a, k) => expand(a, nvars).pow(*k),
    }
}

/// Parses `src` over the ordered variable names and expands it to canonical form.
pub fn parse(src: &str, variables: &[&str]) -> Result<Polynomial, ParseError> {
    let toks = tokenize(src)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end: src.len(),
        vars: variables,
    };
    let tree = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return Err(parser.unexpected());
    }
    Ok(expand(&tree, variables.len()))
}

pub(super) fn render(p: &Polynomial, names: &[&str]) -> String {
    assert_eq!(names.len(), p.nvars(), "one name per variable");
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().enumerate() {
        let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
        if i == 0 {
            if sign == "-" {
                out.push('-');
            }
        } else {
            out.push(' ');
            out.push_str(sign);
            out.push(' ');
        }
        out.push_str(&format!("{mag:.16e}"));
        for (v, &e) in m.exponents().iter().enumerate() {
            match e {
                0 => {}
                1 => out.push_str(&format!("*{}", names[v])),
                _ => out.push_str(&format!("*{}^{}", names[v], e)),
            }
        }
    }
    out
}
