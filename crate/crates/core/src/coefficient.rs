use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Real;

/// Parsed arithmetic expression in x1 (alias x) and x2 (alias y).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X1,
    X2,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn eval<T: Real>(&self, x1: T, x2: T) -> T {
        match self {
            Expr::Num(v) => T::cst(*v),
            Expr::X1 => x1,
            Expr::X2 => x2,
            Expr::Neg(a) => -a.eval(x1, x2),
            Expr::Add(a, b) => a.eval(x1, x2) + b.eval(x1, x2),
            Expr::Sub(a, b) => a.eval(x1, x2) - b.eval(x1, x2),
            Expr::Mul(a, b) => a.eval(x1, x2) * b.eval(x1, x2),
            Expr::Div(a, b) => a.eval(x1, x2) / b.eval(x1, x2),
            Expr::Pow(a, p) => {
                let base = a.eval(x1, x2);
                if p.fract() == 0.0 && p.abs() <= 64.0 {
                    base.powi(*p as i32)
                } else {
                    base.powf(*p)
                }
            }
            Expr::Sin(a) => a.eval(x1, x2).sin(),
            Expr::Cos(a) => a.eval(x1, x2).cos(),
        }
    }

    fn constant(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::X1 | Expr::X2 => None,
            Expr::Neg(a) => a.constant().map(|v| -v),
            Expr::Add(a, b) => Some(a.constant()? + b.constant()?),
            Expr::Sub(a, b) => Some(a.constant()? - b.constant()?),
            Expr::Mul(a, b) => Some(a.constant()? * b.constant()?),
            Expr::Div(a, b) => Some(a.constant()? / b.constant()?),
            Expr::Pow(a, p) => Some(a.constant()?.powf(*p)),
            Expr::Sin(a) => Some(a.constant()?.sin()),
            Expr::Cos(a) => Some(a.constant()?.cos()),
        }
    }

    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::X1 => f.write_str("x1"),
            Expr::X2 => f.write_str("x2"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, p) => write!(f, "({a} ^ {p:?})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let start = self.pos;
            let exp = self.unary()?;
            let p = exp.constant().ok_or(Error::Parse {
                pos: start,
                msg: "exponent must be a constant".into(),
            })?;
            return Ok(Expr::Pow(Box::new(base), p));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                match name {
                    "x1" | "x" => Ok(Expr::X1),
                    "x2" | "y" => Ok(Expr::X2),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "sin" | "cos" => {
                        if !self.eat(b'(') {
                            return Err(self.error("expected `(` after function name"));
                        }
                        let arg = Box::new(self.expr()?);
                        if !self.eat(b')') {
                            return Err(self.error("expected `)`"));
                        }
                        Ok(if name == "sin" { Expr::Sin(arg) } else { Expr::Cos(arg) })
                    }
                    _ => Err(Error::Parse { pos: start, msg: format!("unknown identifier `{name}`") }),
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Parser| {
            while p.pos < p.src.len() && (p.src[p.pos].is_ascii_digit() || p.src[p.pos] == b'.') {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::Parse { pos: start, msg: format!("bad number `{text}`") })
    }
}

/// Scalar spatial coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Coefficient {
    Constant(f64),
    /// c0 + c1 x1 + c2 x2
    Affine { c0: f64, c1: f64, c2: f64 },
    /// c0 + x1^2 + x2^2
    RadialQuadratic { c0: f64 },
    Expression(Arc<Expr>),
}

impl Coefficient {
    pub fn constant(v: f64) -> Self {
        Coefficient::Constant(v)
    }

    pub fn affine(c0: f64, c1: f64, c2: f64) -> Self {
        Coefficient::Affine { c0, c1, c2 }
    }

    pub fn radial_quadratic(c0: f64) -> Self {
        Coefficient::RadialQuadratic { c0 }
    }

    pub fn parse(src: &str) -> Result<Self> {
        let e = Expr::parse(src)?;
        Ok(match e.constant() {
            Some(v) => Coefficient::Constant(v),
            None => Coefficient::Expression(Arc::new(e)),
        })
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.eval_generic(p[0], p[1])
    }

    pub fn eval_generic<T: Real>(&self, x1: T, x2: T) -> T {
        match self {
            Coefficient::Constant(v) => T::cst(*v),
            Coefficient::Affine { c0, c1, c2 } => T::cst(*c0) + T::cst(*c1) * x1 + T::cst(*c2) * x2,
            Coefficient::RadialQuadratic { c0 } => T::cst(*c0) + x1 * x1 + x2 * x2,
            Coefficient::Expression(e) => e.eval(x1, x2),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(v) => Some(*v),
            Coefficient::Affine { c0, c1, c2 } if *c1 == 0.0 && *c2 == 0.0 => Some(*c0),
            Coefficient::Expression(e) => e.constant(),
            _ => None,
        }
    }

    pub fn to_expr(&self) -> Expr {
        let num = |v: f64| Box::new(Expr::Num(v));
        match self {
            Coefficient::Constant(v) => Expr::Num(*v),
            Coefficient::Affine { c0, c1, c2 } => Expr::Add(
                Box::new(Expr::Add(num(*c0), Box::new(Expr::Mul(num(*c1), Box::new(Expr::X1))))),
                Box::new(Expr::Mul(num(*c2), Box::new(Expr::X2))),
            ),
            Coefficient::RadialQuadratic { c0 } => Expr::Add(
                Box::new(Expr::Add(num(*c0), Box::new(Expr::Pow(Box::new(Expr::X1), 2.0)))),
                Box::new(Expr::Pow(Box::new(Expr::X2), 2.0)),
            ),
            Coefficient::Expression(e) => (**e).clone(),
        }
    }

    fn combine(
        &self,
        other: &Coefficient,
        num: impl Fn(f64, f64) -> f64,
        node: impl Fn(Box<Expr>, Box<Expr>) -> Expr,
    ) -> Coefficient {
        match (self.as_constant(), other.as_constant()) {
            (Some(a), Some(b)) => Coefficient::Constant(num(a, b)),
            _ => Coefficient::Expression(Arc::new(node(Box::new(self.to_expr()), Box::new(other.to_expr())))),
        }
    }

    pub fn add(&self, o: &Coefficient) -> Coefficient {
        self.combine(o, |a, b| a + b, Expr::Add)
    }

    pub fn sub(&self, o: &Coefficient) -> Coefficient {
        self.combine(o, |a, b| a - b, Expr::Sub)
    }

    pub fn mul(&self, o: &Coefficient) -> Coefficient {
        self.combine(o, |a, b| a * b, Expr::Mul)
    }

    pub fn div(&self, o: &Coefficient) -> Coefficient {
        self.combine(o, |a, b| a / b, Expr::Div)
    }

    pub fn scale(&self, s: f64) -> Coefficient {
        Coefficient::Constant(s).mul(self)
    }

    /// Minimum over a set of sample points.
    pub fn min_over(&self, points: impl IntoIterator<Item = [f64; 2]>) -> f64 {
        points.into_iter().map(|p| self.eval(p)).fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(v) => write!(f, "{v:?}"),
            Coefficient::Affine { c0, c1, c2 } => write!(f, "{c0:?} + {c1:?}*x1 + {c2:?}*x2"),
            Coefficient::RadialQuadratic { c0 } => write!(f, "{c0:?} + x1^2 + x2^2"),
            Coefficient::Expression(e) => write!(f, "{e}"),
        }
    }
}

impl FromStr for Coefficient {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Coefficient::parse(s)
    }
}

impl TryFrom<String> for Coefficient {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Coefficient::parse(&s)
    }
}

impl From<Coefficient> for String {
    fn from(c: Coefficient) -> String {
        c.to_string()
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Constant(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let c = Coefficient::parse("8 + x1 - x2").unwrap();
        assert!((c.eval([0.3, 0.2]) - 8.1).abs() < 1e-14);
        let c = Coefficient::parse("4+x^2+y^2").unwrap();
        assert!((c.eval([0.5, 0.5]) - 4.5).abs() < 1e-15);
        let c = Coefficient::parse("sin(pi*x1)^2 * cos(pi*x2) / 2").unwrap();
        let (x, y) = (0.3f64, 0.4f64);
        let expect = (std::f64::consts::PI * x).sin().powi(2) * (std::f64::consts::PI * y).cos() / 2.0;
        assert!((c.eval([x, y]) - expect).abs() < 1e-15);
        assert_eq!(Coefficient::parse("1/20").unwrap(), Coefficient::Constant(0.05));
        assert!((Coefficient::parse("-2^2").unwrap().eval([0.0, 0.0]) + 4.0).abs() < 1e-15);
        assert!((Coefficient::parse("2.5e-1").unwrap().eval([0.0, 0.0]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "1 +", "x3", "sin x", "(1", "x^y", "1 2"] {
            assert!(Coefficient::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trip() {
        for src in ["8+x1-x2", "4+x1^2+x2^2", "1/(3 - 1/20)", "sin(pi*x)*cos(2*y)"] {
            let c = Coefficient::parse(src).unwrap();
            let again = Coefficient::parse(&c.to_string()).unwrap();
            for p in [[0.1, 0.2], [0.7, 0.3]] {
                assert_eq!(c.eval(p), again.eval(p));
            }
        }
        let a = Coefficient::affine(4.0, 1.0, -1.0);
        let b = Coefficient::parse(&a.to_string()).unwrap();
        assert_eq!(a.eval([0.3, 0.9]), b.eval([0.3, 0.9]));
    }

    #[test]
    fn combinators_fold_constants() {
        let r0 = Coefficient::constant(0.05);
        let r1 = Coefficient::constant(3.0);
        assert_eq!(Coefficient::constant(1.0).div(&r1.sub(&r0)), Coefficient::Constant(1.0 / 2.95));
        let r1 = Coefficient::affine(4.0, 1.0, -1.0);
        let w = r0.mul(&r1).div(&r1.sub(&r0));
        let p = [0.2, 0.6];
        let (a, b) = (0.05, 4.0 + 0.2 - 0.6);
        assert!((w.eval(p) - a * b / (b - a)).abs() < 1e-15);
    }
}
