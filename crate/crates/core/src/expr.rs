//! Scalar-field expressions over chart coordinates and named parameters.
//!
//! Grammar (standard precedence, left associative, `^` binds tighter than
//! unary minus):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' integer)?
//! base   := number | ident | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | tan | sqrt
//! ```

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::error::Result;
use crate::jet::{Jet, JetSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("unexpected character '{ch}' at byte {pos}")]
    Lexical { ch: char, pos: usize },
    #[error("unbalanced parenthesis at byte {pos}")]
    Unbalanced { pos: usize },
    #[error("unknown identifier '{name}' at byte {pos}")]
    UnknownIdent { name: String, pos: usize },
    #[error("exponent must be an integer at byte {pos}")]
    NonIntegerExponent { pos: usize },
    #[error("unexpected {found} at byte {pos}")]
    Unexpected { found: String, pos: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "tan" => Some(Func::Tan),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
        }
    }
}

pub fn is_reserved(name: &str) -> bool {
    Func::from_name(name).is_some()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord { index: usize, name: Arc<str> },
    Param { index: usize, name: Arc<str> },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Evaluate over jet arithmetic: coordinates become coordinate jets,
    /// parameters become constants.
    pub fn eval_jet(&self, space: &Arc<JetSpace>, params: &[f64]) -> Result<Jet> {
        Ok(match self {
            Expr::Const(c) => space.constant(*c),
            Expr::Coord { index, .. } => space.variable(*index)?,
            Expr::Param { index, .. } => space.constant(params[*index]),
            Expr::Neg(a) => -a.eval_jet(space, params)?,
            Expr::Add(a, b) => a.eval_jet(space, params)? + b.eval_jet(space, params)?,
            Expr::Sub(a, b) => a.eval_jet(space, params)? - b.eval_jet(space, params)?,
            Expr::Mul(a, b) => {
                // skip work on literal zeros, which are common in frame matrices
                if a.is_zero() || b.is_zero() {
                    return Ok(space.zero());
                }
                a.eval_jet(space, params)? * b.eval_jet(space, params)?
            }
            Expr::Div(a, b) => {
                let den = b.eval_jet(space, params)?;
                a.eval_jet(space, params)?.checked_div(&den)?
            }
            Expr::Pow(a, n) => a.eval_jet(space, params)?.powi(*n)?,
            Expr::Call(f, a) => {
                let x = a.eval_jet(space, params)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan()?,
                    Func::Sqrt => x.sqrt()?,
                }
            }
        })
    }

    /// Plain floating-point evaluation.
    pub fn eval(&self, point: &[f64], params: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Coord { index, .. } => point[*index],
            Expr::Param { index, .. } => params[*index],
            Expr::Neg(a) => -a.eval(point, params),
            Expr::Add(a, b) => a.eval(point, params) + b.eval(point, params),
            Expr::Sub(a, b) => a.eval(point, params) - b.eval(point, params),
            Expr::Mul(a, b) => a.eval(point, params) * b.eval(point, params),
            Expr::Div(a, b) => a.eval(point, params) / b.eval(point, params),
            Expr::Pow(a, n) => a.eval(point, params).powi(*n),
            Expr::Call(f, a) => {
                let x = a.eval(point, params);
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Sqrt => x.sqrt(),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let own = self.precedence();
        if own < min {
            write!(f, "(")?;
        }
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "-{}", -c)?
                } else {
                    write!(f, "{c}")?
                }
            }
            Expr::Coord { name, .. } | Expr::Param { name, .. } => write!(f, "{name}")?,
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_prec(f, 3)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_prec(f, 1)?;
                write!(f, " {} ", if matches!(self, Expr::Add(..)) { '+' } else { '-' })?;
                b.write_prec(f, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_prec(f, 2)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { '*' } else { '/' })?;
                b.write_prec(f, 3)?;
            }
            Expr::Pow(a, n) => {
                a.write_prec(f, 5)?;
                write!(f, "^{n}")?;
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if own < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> std::result::Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let v: f64 = s
                .parse()
                .map_err(|_| ParseError::Lexical { ch: c, pos: start })?;
            let integral = !s.contains(['.', 'e', 'E']);
            out.push((Tok::Num(v, integral), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "+-*/^".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else if c == '(' {
            out.push((Tok::LParen, i));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or(c);
            return Err(ParseError::Lexical { ch, pos: i });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    chart: &'a [String],
    params: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        let found = match self.peek() {
            Tok::Num(v, _) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => return ParseError::Unbalanced { pos: self.at() },
            Tok::End => "end of input".into(),
        };
        ParseError::Unexpected { found, pos: self.at() }
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            lhs = if c == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.factor()?;
            lhs = if c == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> std::result::Result<Expr, ParseError> {
        if let Tok::Op('-') = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if let Tok::Op('^') = self.peek() {
            self.bump();
            let pos = self.at();
            let negative = if let Tok::Op('-') = self.peek() {
                self.bump();
                true
            } else {
                false
            };
            match self.bump() {
                (Tok::Num(v, true), _) if v <= i32::MAX as f64 => {
                    let n = v as i32;
                    return Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }));
                }
                _ => return Err(ParseError::NonIntegerExponent { pos }),
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> std::result::Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Ident(name) => {
                let pos = self.at();
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(self.unexpected());
                    }
                    let open = self.at();
                    self.bump();
                    let arg = self.expr()?;
                    self.close(open)?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if let Some(index) = self.chart.iter().position(|c| *c == name) {
                    Ok(Expr::Coord { index, name: name.into() })
                } else if let Some(index) = self.params.iter().position(|p| *p == name) {
                    Ok(Expr::Param { index, name: name.into() })
                } else {
                    Err(ParseError::UnknownIdent { name, pos })
                }
            }
            Tok::LParen => {
                let open = self.at();
                self.bump();
                let e = self.expr()?;
                self.close(open)?;
                Ok(e)
            }
            _ => Err(self.unexpected()),
        }
    }

    fn close(&mut self, _open: usize) -> std::result::Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            Tok::End => Err(ParseError::Unbalanced { pos: self.at() }),
            _ => Err(self.unexpected()),
        }
    }
}

/// Parse `text`, resolving identifiers against the chart and parameter names.
pub fn parse(text: &str, chart: &[String], params: &[String]) -> std::result::Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, chart, params };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        Tok::RParen => Err(ParseError::Unbalanced { pos: p.at() }),
        _ => Err(p.unexpected()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn coord(i: usize, n: &str) -> Box<Expr> {
        Box::new(Expr::Coord { index: i, name: n.into() })
    }

    #[test]
    fn parses_power_product() {
        let e = parse("sin(theta)^2*(1+A)", &names(&["theta"]), &names(&["A"])).unwrap();
        let expected = Expr::Mul(
            Box::new(Expr::Pow(Box::new(Expr::Call(Func::Sin, coord(0, "theta"))), 2)),
            Box::new(Expr::Add(
                Box::new(Expr::Const(1.0)),
                Box::new(Expr::Param { index: 0, name: "A".into() }),
            )),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn unbalanced_paren_position() {
        let err = parse("cos(phi", &names(&["phi"]), &[]).unwrap_err();
        assert_eq!(err, ParseError::Unbalanced { pos: 7 });
        assert_eq!(err.to_string(), "unbalanced parenthesis at byte 7");
        let err = parse("(x))", &names(&["x"]), &[]).unwrap_err();
        assert_eq!(err, ParseError::Unbalanced { pos: 3 });
    }

    #[test]
    fn disc_frame_component() {
        let chart = names(&["x", "y", "varphi", "psi", "theta"]);
        let e = parse("R*cos(varphi)", &chart, &names(&["R"])).unwrap();
        assert_eq!(
            e,
            Expr::Mul(
                Box::new(Expr::Param { index: 0, name: "R".into() }),
                Box::new(Expr::Call(Func::Cos, coord(2, "varphi")))
            )
        );
    }

    #[test]
    fn error_kinds() {
        let chart = names(&["x"]);
        assert!(matches!(parse("x $ 2", &chart, &[]), Err(ParseError::Lexical { ch: '$', pos: 2 })));
        assert!(matches!(
            parse("x + zz", &chart, &[]),
            Err(ParseError::UnknownIdent { pos: 4, .. })
        ));
        assert!(matches!(
            parse("x^1.5", &chart, &[]),
            Err(ParseError::NonIntegerExponent { pos: 2 })
        ));
        assert!(matches!(parse("x^y", &chart, &[]), Err(ParseError::NonIntegerExponent { .. })));
        assert!(matches!(parse("x +", &chart, &[]), Err(ParseError::Unexpected { pos: 3, .. })));
    }

    #[test]
    fn pow_binds_tighter_than_minus() {
        let chart = names(&["x"]);
        let e = parse("-x^2", &chart, &[]).unwrap();
        assert_eq!(e.eval(&[3.0], &[]), -9.0);
        let e = parse("2^-2", &[], &[]).unwrap();
        assert_eq!(e.eval(&[], &[]), 0.25);
        let e = parse("1 - 2 - 3", &[], &[]).unwrap();
        assert_eq!(e.eval(&[], &[]), -4.0);
        let e = parse("8 / 4 / 2", &[], &[]).unwrap();
        assert_eq!(e.eval(&[], &[]), 1.0);
    }

    #[test]
    fn eval_jet_examples() {
        let xy = names(&["x", "y"]);
        let e = parse("x+y", &xy, &[]).unwrap();
        let j = e.eval_jet(&JetSpace::new(&[1.0, 2.0], 1), &[]).unwrap();
        assert_eq!(j.value(), 3.0);
        assert_eq!(j.gradient_values().unwrap(), vec![1.0, 1.0]);

        let th = names(&["theta"]);
        let g22 = parse("A*sin(theta)^2", &th, &names(&["A"])).unwrap();
        let j = g22.eval_jet(&JetSpace::new(&[PI / 2.0], 0), &[2.0]).unwrap();
        assert!((j.value() - 2.0).abs() < 1e-15);

        let a = 1.7;
        let j = g22.eval_jet(&JetSpace::new(&[PI / 3.0], 1), &[a]).unwrap();
        assert!((j.partial(&[1]).unwrap() - a * 3f64.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn display_reparses() {
        let chart = names(&["x", "y"]);
        for s in ["-x^2", "(x - y)*(x + y)", "x/(y*2)", "sin(x)^-3", "-(x + 1)", "x - (y - 1)", "1e-7*x"] {
            let a = parse(s, &chart, &[]).unwrap();
            let b = parse(&a.to_string(), &chart, &[]).unwrap();
            assert_eq!(a, b, "{s} -> {a}");
        }
    }
}
