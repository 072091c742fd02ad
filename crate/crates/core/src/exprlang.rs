//! A small expression language for coefficient fields.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' int)?
//! atom   := number | 'i' | 'pi' | ident | fn '(' expr ')' | '(' expr ')' | '-' atom
//! ```
//!
//! Unary minus applies to an atom, so `-x^2` is `(-x)^2`. Exponents are
//! integer literals, optionally signed or parenthesised (`x^-2`, `x^(-2)`).
//! Complex coordinates are always written as explicit real pairs.

use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::jets::{check_shape, jet_fn, Jet, JetFn, C64};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    I,
    Pi,
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(JetFn, Box<Expr>),
}

/// A parsed expression together with the chart it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    chart: Arc<[String]>,
    ast: Expr,
}

impl Expression {
    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn chart(&self) -> &[String] {
        &self.chart
    }

    /// Evaluates with each chart coordinate seeded as an identity jet.
    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        if point.len() != self.chart.len() {
            return Err(GeomError::PointDimension {
                got: point.len(),
                expected: self.chart.len(),
            });
        }
        check_shape(point.len(), order)?;
        let seeds: Vec<Jet> = point
            .iter()
            .enumerate()
            .map(|(k, &x)| Jet::variable(point.len(), order, k, x))
            .collect();
        eval_with(&self.ast, &seeds)
    }

    /// Evaluates with caller-supplied jets for the chart coordinates.
    pub fn eval_seeded(&self, seeds: &[Jet]) -> Result<Jet> {
        if seeds.len() != self.chart.len() {
            return Err(GeomError::PointDimension {
                got: seeds.len(),
                expected: self.chart.len(),
            });
        }
        eval_with(&self.ast, seeds)
    }

    /// Plain complex value at a point.
    pub fn eval(&self, point: &[f64]) -> Result<C64> {
        Ok(self.eval_jet(point, 0)?.value())
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, &self.ast, &self.chart)
    }
}

/// Parses `source` over the named chart coordinates.
pub fn parse(source: &str, chart: &[&str]) -> Result<Expression> {
    let chart: Arc<[String]> = chart.iter().map(|s| s.to_string()).collect();
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
        chart: &chart,
    };
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(Expression { chart, ast })
}

/// Renders an AST with full parenthesisation; parsing the output yields the same AST.
pub fn pretty(ast: &Expr, chart: &[String]) -> String {
    struct P<'a>(&'a Expr, &'a [String]);
    impl fmt::Display for P<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_expr(f, self.0, self.1)
        }
    }
    P(ast, chart).to_string()
}

fn is_atomic(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Num(_) | Expr::I | Expr::Pi | Expr::Var(_) | Expr::Call(..)
    )
}

fn write_atom(f: &mut fmt::Formatter<'_>, e: &Expr, chart: &[String]) -> fmt::Result {
    if is_atomic(e) {
        write_expr(f, e, chart)
    } else {
        write!(f, "(")?;
        write_expr(f, e, chart)?;
        write!(f, ")")
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, chart: &[String]) -> fmt::Result {
    let bin = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr| {
        write!(f, "(")?;
        write_expr(f, a, chart)?;
        write!(f, " {op} ")?;
        write_expr(f, b, chart)?;
        write!(f, ")")
    };
    match e {
        Expr::Num(v) => write!(f, "{v:?}"),
        Expr::I => write!(f, "i"),
        Expr::Pi => write!(f, "pi"),
        Expr::Var(k) => write!(f, "{}", chart[*k]),
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_atom(f, a, chart)
        }
        Expr::Add(a, b) => bin(f, a, "+", b),
        Expr::Sub(a, b) => bin(f, a, "-", b),
        Expr::Mul(a, b) => bin(f, a, "*", b),
        Expr::Div(a, b) => bin(f, a, "/", b),
        Expr::Pow(a, n) => {
            write_atom(f, a, chart)?;
            write!(f, "^{n}")
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a, chart)?;
            write!(f, ")")
        }
    }
}

fn eval_with(e: &Expr, seeds: &[Jet]) -> Result<Jet> {
    let (n, k) = (seeds[0].nvars(), seeds[0].order());
    Ok(match e {
        Expr::Num(v) => Jet::real(n, k, *v),
        Expr::I => Jet::constant(n, k, C64::new(0.0, 1.0)),
        Expr::Pi => Jet::real(n, k, std::f64::consts::PI),
        Expr::Var(i) => seeds[*i].clone(),
        Expr::Neg(a) => -eval_with(a, seeds)?,
        Expr::Add(a, b) => eval_with(a, seeds)? + eval_with(b, seeds)?,
        Expr::Sub(a, b) => eval_with(a, seeds)? - eval_with(b, seeds)?,
        Expr::Mul(a, b) => eval_with(a, seeds)? * eval_with(b, seeds)?,
        Expr::Div(a, b) => eval_with(a, seeds)?.try_div(&eval_with(b, seeds)?)?,
        Expr::Pow(a, p) => eval_with(a, seeds)?.powi(*p)?,
        Expr::Call(func, a) => jet_fn(*func, &eval_with(a, seeds)?)?,
    })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    chart: &'a [String],
}

impl Parser<'_> {
    fn error(&self, message: &str) -> GeomError {
        GeomError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
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
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let n = if self.eat(b'(') {
                let n = self.integer()?;
                self.expect(b')')?;
                n
            } else {
                self.integer()?
            };
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32> {
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("exponent must be an integer literal"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let v: i32 = text.parse().map_err(|_| GeomError::Syntax {
            offset: start,
            message: "exponent out of range".into(),
        })?;
        Ok(if neg { -v } else { v })
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let b = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p > b
        };
        let mut p = self.pos;
        let mut any = digits(&mut p);
        if p < s.len() && s[p] == b'.' {
            p += 1;
            any |= digits(&mut p);
        }
        if !any {
            return Err(self.error("malformed number"));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) {
                p = q;
            }
        }
        self.pos = p;
        let text = std::str::from_utf8(&s[start..p]).unwrap_or("");
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| GeomError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(c) = self.peek() else {
            return Err(self.error("unexpected end of input"));
        };
        if c == b'-' {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.atom()?)));
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let is_call = self.peek() == Some(b'(');
            if is_call {
                let Some(func) = JetFn::from_name(name) else {
                    return Err(GeomError::UnknownFunction {
                        name: name.to_string(),
                        offset: start,
                    });
                };
                self.pos += 1;
                let arg = self.expr()?;
                self.expect(b')')?;
                return Ok(Expr::Call(func, Box::new(arg)));
            }
            return match name {
                "i" => Ok(Expr::I),
                "pi" => Ok(Expr::Pi),
                _ => match self.chart.iter().position(|c| c == name) {
                    Some(k) => Ok(Expr::Var(k)),
                    None => Err(GeomError::UnknownIdentifier {
                        name: name.to_string(),
                        offset: start,
                    }),
                },
            };
        }
        Err(self.error(&format!("unexpected character `{}`", c as char)))
    }
}
