//! Truncated multivariate Taylor jets with complex coefficients.
//!
//! A jet of order `K` in `n` real variables stores the Taylor coefficients
//! `f^(α)(x0) / α!` for every multi-index `|α| ≤ K`. Coefficients are laid out
//! by total degree, so the coefficients of an order-`K` jet are a prefix of the
//! coefficients of any higher-order jet of the same field.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{GeomError, Result};

pub type C64 = Complex64;

/// Highest jet order the index tables are built for.
pub const MAX_ORDER: usize = 6;
/// Largest supported number of chart variables.
pub const MAX_VARS: usize = 4;

const CUT_EPS: f64 = 1e-12;

struct Tables {
    nvars: usize,
    exps: Vec<[u8; MAX_VARS]>,
    // (target, left, right), sorted by target
    products: Vec<(u16, u16, u16)>,
    // raise[k][i] = index of exps[i] + e_k, or u16::MAX past MAX_ORDER
    raise: Vec<Vec<u16>>,
    lookup: HashMap<[u8; MAX_VARS], usize>,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of coefficients of a jet with `nvars` variables and order `order`.
pub fn coeff_count(nvars: usize, order: usize) -> usize {
    binomial(nvars + order, order)
}

fn build_tables(nvars: usize) -> Tables {
    let mut exps: Vec<[u8; MAX_VARS]> = Vec::new();
    for deg in 0..=MAX_ORDER {
        let mut cur = [0u8; MAX_VARS];
        push_degree(nvars, 0, deg, &mut cur, &mut exps);
    }
    let lookup: HashMap<_, _> = exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();

    let mut products = Vec::new();
    for (i, a) in exps.iter().enumerate() {
        for (j, b) in exps.iter().enumerate() {
            let mut s = [0u8; MAX_VARS];
            let mut deg = 0usize;
            for k in 0..MAX_VARS {
                s[k] = a[k] + b[k];
                deg += s[k] as usize;
            }
            if deg <= MAX_ORDER {
                products.push((lookup[&s] as u16, i as u16, j as u16));
            }
        }
    }
    products.sort_unstable();

    let raise = (0..nvars)
        .map(|k| {
            exps.iter()
                .map(|e| {
                    let mut up = *e;
                    up[k] += 1;
                    lookup.get(&up).map_or(u16::MAX, |&i| i as u16)
                })
                .collect()
        })
        .collect();

    Tables {
        nvars,
        exps,
        products,
        raise,
        lookup,
    }
}

fn push_degree(
    nvars: usize,
    var: usize,
    remaining: usize,
    cur: &mut [u8; MAX_VARS],
    out: &mut Vec<[u8; MAX_VARS]>,
) {
    if var + 1 == nvars {
        cur[var] = remaining as u8;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[var] = e as u8;
        push_degree(nvars, var + 1, remaining - e, cur, out);
    }
    cur[var] = 0;
}

fn tables(nvars: usize) -> &'static Tables {
    static TABLES: [OnceLock<Tables>; MAX_VARS] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    TABLES[nvars - 1].get_or_init(|| build_tables(nvars))
}

/// Validates a jet shape.
pub fn check_shape(nvars: usize, order: usize) -> Result<()> {
    if nvars == 0 || nvars > MAX_VARS || order > MAX_ORDER {
        return Err(GeomError::UnsupportedShape { nvars, order });
    }
    Ok(())
}

/// Arithmetic selector for [`jet_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Strict binary arithmetic: both operands must share order and variable count.
pub fn jet_arith(a: &Jet, b: &Jet, op: ArithOp) -> Result<Jet> {
    if a.nvars != b.nvars {
        return Err(GeomError::NvarsMismatch {
            left: a.nvars as usize,
            right: b.nvars as usize,
        });
    }
    if a.order != b.order {
        return Err(GeomError::OrderMismatch {
            left: a.order as usize,
            right: b.order as usize,
        });
    }
    match op {
        ArithOp::Add => Ok(a + b),
        ArithOp::Sub => Ok(a - b),
        ArithOp::Mul => Ok(a * b),
        ArithOp::Div => a.try_div(b),
    }
}

/// Elementary function selector for [`jet_fn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetFn {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Conj,
    Re,
    Im,
    Abs2,
}

impl JetFn {
    pub fn from_name(name: &str) -> Option<JetFn> {
        Some(match name {
            "exp" => JetFn::Exp,
            "log" => JetFn::Log,
            "sin" => JetFn::Sin,
            "cos" => JetFn::Cos,
            "sqrt" => JetFn::Sqrt,
            "conj" => JetFn::Conj,
            "re" => JetFn::Re,
            "im" => JetFn::Im,
            "abs2" => JetFn::Abs2,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            JetFn::Exp => "exp",
            JetFn::Log => "log",
            JetFn::Sin => "sin",
            JetFn::Cos => "cos",
            JetFn::Sqrt => "sqrt",
            JetFn::Conj => "conj",
            JetFn::Re => "re",
            JetFn::Im => "im",
            JetFn::Abs2 => "abs2",
        }
    }

    pub const ALL: [JetFn; 9] = [
        JetFn::Exp,
        JetFn::Log,
        JetFn::Sin,
        JetFn::Cos,
        JetFn::Sqrt,
        JetFn::Conj,
        JetFn::Re,
        JetFn::Im,
        JetFn::Abs2,
    ];
}

/// Applies an elementary function.
pub fn jet_fn(f: JetFn, a: &Jet) -> Result<Jet> {
    match f {
        JetFn::Exp => Ok(a.exp()),
        JetFn::Log => a.ln(),
        JetFn::Sin => Ok(a.sin()),
        JetFn::Cos => Ok(a.cos()),
        JetFn::Sqrt => a.sqrt(),
        JetFn::Conj => Ok(a.conj()),
        JetFn::Re => Ok(a.re()),
        JetFn::Im => Ok(a.im()),
        JetFn::Abs2 => Ok(a.abs2()),
    }
}

/// Truncated Taylor expansion of a complex field of real variables.
#[derive(Clone, PartialEq)]
pub struct Jet {
    nvars: u8,
    order: u8,
    coeffs: Vec<C64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Jet(n={}, K={}, {:?})",
            self.nvars, self.order, self.coeffs
        )
    }
}

impl Jet {
    /// Constant jet. Panics on an unsupported shape; see [`check_shape`].
    pub fn constant(nvars: usize, order: usize, value: C64) -> Jet {
        check_shape(nvars, order).expect("jet shape");
        let mut coeffs = vec![C64::new(0.0, 0.0); coeff_count(nvars, order)];
        coeffs[0] = value;
        Jet {
            nvars: nvars as u8,
            order: order as u8,
            coeffs,
        }
    }

    pub fn zero(nvars: usize, order: usize) -> Jet {
        Jet::constant(nvars, order, C64::new(0.0, 0.0))
    }

    pub fn real(nvars: usize, order: usize, value: f64) -> Jet {
        Jet::constant(nvars, order, C64::new(value, 0.0))
    }

    /// Seed jet for coordinate `var` with base value `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Jet {
        assert!(var < nvars, "variable index {var} out of range");
        let mut j = Jet::real(nvars, order, value);
        if order >= 1 {
            j.coeffs[1 + var] = C64::new(1.0, 0.0);
        }
        j
    }

    /// Builds a jet from raw coefficients in the graded layout.
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<C64>) -> Result<Jet> {
        check_shape(nvars, order)?;
        let expected = coeff_count(nvars, order);
        if coeffs.len() != expected {
            return Err(GeomError::InvalidParameter(format!(
                "expected {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Jet {
            nvars: nvars as u8,
            order: order as u8,
            coeffs,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    /// Multi-index of the coefficient stored at `index`.
    pub fn multi_index(&self, index: usize) -> Vec<u32> {
        let t = tables(self.nvars());
        t.exps[index][..t.nvars].iter().map(|&e| e as u32).collect()
    }

    /// Taylor coefficient for multi-index `alpha` (zero past the jet order).
    pub fn coeff(&self, alpha: &[u32]) -> C64 {
        assert_eq!(alpha.len(), self.nvars(), "multi-index length");
        let deg: u32 = alpha.iter().sum();
        if deg as usize > self.order() {
            return C64::new(0.0, 0.0);
        }
        let mut key = [0u8; MAX_VARS];
        for (k, &a) in alpha.iter().enumerate() {
            key[k] = a as u8;
        }
        self.coeffs[tables(self.nvars()).lookup[&key]]
    }

    /// Mixed partial derivative `∂^α f` at the base point.
    pub fn derivative(&self, alpha: &[u32]) -> C64 {
        let fact: f64 = alpha
            .iter()
            .map(|&a| (1..=a).map(f64::from).product::<f64>())
            .product();
        self.coeff(alpha) * fact
    }

    /// First partial derivatives at the base point.
    pub fn gradient(&self) -> Vec<C64> {
        (0..self.nvars())
            .map(|k| {
                if self.order >= 1 {
                    self.coeffs[1 + k]
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// Partial derivative along `var` as a jet one order lower.
    pub fn partial(&self, var: usize) -> Result<Jet> {
        if self.order == 0 {
            return Err(GeomError::OrderExhausted(
                "partial derivative of an order-0 jet".into(),
            ));
        }
        let t = tables(self.nvars());
        let order = self.order() - 1;
        let len = coeff_count(self.nvars(), order);
        let raise = &t.raise[var];
        let coeffs = (0..len)
            .map(|i| {
                let up = raise[i] as usize;
                let factor = f64::from(t.exps[i][var] + 1);
                self.coeffs[up] * factor
            })
            .collect();
        Ok(Jet {
            nvars: self.nvars,
            order: order as u8,
            coeffs,
        })
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        Jet {
            nvars: self.nvars,
            order: order as u8,
            coeffs: self.coeffs[..coeff_count(self.nvars(), order)].to_vec(),
        }
    }

    /// Largest coefficient magnitude.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Whether every coefficient has imaginary part below `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= tol)
    }

    pub fn map_coeffs(&self, f: impl Fn(C64) -> C64) -> Jet {
        Jet {
            nvars: self.nvars,
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Jet {
        self.map_coeffs(|c| c * s)
    }

    /// Coefficient-wise conjugate. Valid because chart variables are real.
    pub fn conj(&self) -> Jet {
        self.map_coeffs(|c| c.conj())
    }

    pub fn re(&self) -> Jet {
        self.map_coeffs(|c| C64::new(c.re, 0.0))
    }

    pub fn im(&self) -> Jet {
        self.map_coeffs(|c| C64::new(c.im, 0.0))
    }

    /// `a * conj(a)` with the imaginary part dropped.
    pub fn abs2(&self) -> Jet {
        (self * &self.conj()).re()
    }

    /// Evaluates `Σ c_n δ^n` where `δ = self - value`.
    fn compose(&self, series: &[C64]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = C64::new(0.0, 0.0);
        let k = self.order();
        let mut out = Jet::constant(self.nvars(), k, series[k]);
        for n in (0..k).rev() {
            out = &out * &delta;
            out.coeffs[0] += series[n];
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut fact = 1.0;
        for n in 0..=self.order() {
            if n > 0 {
                fact *= n as f64;
            }
            series.push(e / fact);
        }
        self.compose(&series)
    }

    fn check_cut(&self, function: &'static str) -> Result<C64> {
        let v = self.value();
        if v.re < 0.0 && v.im.abs() <= CUT_EPS * v.norm() {
            return Err(GeomError::BranchCut {
                function,
                value: format!("{v}"),
            });
        }
        Ok(v)
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Result<Jet> {
        let v = self.check_cut("log")?;
        if v.norm() == 0.0 {
            return Err(GeomError::BranchCut {
                function: "log",
                value: "0".into(),
            });
        }
        let mut series = vec![v.ln()];
        let inv = v.inv();
        let mut p = C64::new(1.0, 0.0);
        for n in 1..=self.order() {
            p *= inv;
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            series.push(p * (sign / n as f64));
        }
        Ok(self.compose(&series))
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Result<Jet> {
        let v = self.check_cut("sqrt")?;
        if v.norm() == 0.0 && self.order() > 0 {
            return Err(GeomError::BranchCut {
                function: "sqrt",
                value: "0".into(),
            });
        }
        let root = v.sqrt();
        let mut series = vec![root];
        if self.order() > 0 {
            let inv = v.inv();
            let mut term = root;
            for n in 1..=self.order() {
                // binom(1/2, n) recursion
                term = term * inv * ((0.5 - (n as f64 - 1.0)) / n as f64);
                series.push(term);
            }
        }
        Ok(self.compose(&series))
    }

    fn trig_series(&self, phase: usize) -> Vec<C64> {
        let v = self.value();
        let (s, c) = (v.sin(), v.cos());
        let cycle = [s, c, -s, -c];
        let mut fact = 1.0;
        (0..=self.order())
            .map(|n| {
                if n > 0 {
                    fact *= n as f64;
                }
                cycle[(n + phase) % 4] / fact
            })
            .collect()
    }

    pub fn sin(&self) -> Jet {
        self.compose(&self.trig_series(0))
    }

    pub fn cos(&self) -> Jet {
        self.compose(&self.trig_series(1))
    }

    /// Multiplicative inverse.
    pub fn recip(&self) -> Result<Jet> {
        let v = self.value();
        if v.norm() == 0.0 {
            return Err(GeomError::DivisionByZero);
        }
        let inv = v.inv();
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut p = inv;
        for n in 0..=self.order() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            series.push(p * sign);
            p *= inv;
        }
        Ok(self.compose(&series))
    }

    /// Quotient with auto-truncation to the lower order.
    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        Ok(self * &other.recip()?)
    }

    /// Integer power; negative exponents require a nonzero value.
    pub fn powi(&self, n: i32) -> Result<Jet> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Jet::constant(self.nvars(), self.order(), C64::new(1.0, 0.0));
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(C64, C64) -> C64) -> Jet {
        assert_eq!(self.nvars, other.nvars, "jet variable count mismatch");
        let order = self.order.min(other.order);
        let len = coeff_count(self.nvars(), order as usize);
        Jet {
            nvars: self.nvars,
            order,
            coeffs: (0..len)
                .map(|i| f(self.coeffs[i], other.coeffs[i]))
                .collect(),
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        assert_eq!(self.nvars, other.nvars, "jet variable count mismatch");
        let order = self.order.min(other.order);
        let len = coeff_count(self.nvars(), order as usize);
        let mut coeffs = vec![C64::new(0.0, 0.0); len];
        let (a, b) = (&self.coeffs, &other.coeffs);
        for &(t, i, j) in &tables(self.nvars()).products {
            let t = t as usize;
            if t >= len {
                break;
            }
            coeffs[t] += a[i as usize] * b[j as usize];
        }
        Jet {
            nvars: self.nvars,
            order,
            coeffs,
        }
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet { (&self).$m(rhs) }
        }
        impl<'a> $tr<Jet> for &'a Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { self.$m(&rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map_coeffs(|c| -c)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

impl Mul<C64> for &Jet {
    type Output = Jet;
    fn mul(self, s: C64) -> Jet {
        self.scale(s)
    }
}

impl Mul<C64> for Jet {
    type Output = Jet;
    fn mul(self, s: C64) -> Jet {
        self.scale(s)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.map_coeffs(|c| c * s)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        &self * s
    }
}

impl Add<C64> for Jet {
    type Output = Jet;
    fn add(mut self, s: C64) -> Jet {
        self.coeffs[0] += s;
        self
    }
}

impl Add<C64> for &Jet {
    type Output = Jet;
    fn add(self, s: C64) -> Jet {
        self.clone() + s
    }
}

impl Sub<C64> for Jet {
    type Output = Jet;
    fn sub(mut self, s: C64) -> Jet {
        self.coeffs[0] -= s;
        self
    }
}

impl Sub<C64> for &Jet {
    type Output = Jet;
    fn sub(self, s: C64) -> Jet {
        self.clone() - s
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if rhs.order >= self.order && rhs.nvars == self.nvars {
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a += b;
            }
        } else {
            *self = &*self + rhs;
        }
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        if rhs.order >= self.order && rhs.nvars == self.nvars {
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a -= b;
            }
        } else {
            *self = &*self - rhs;
        }
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self -= &rhs;
    }
}

impl MulAssign<&Jet> for Jet {
    fn mul_assign(&mut self, rhs: &Jet) {
        *self = &*self * rhs;
    }
}

impl MulAssign<C64> for Jet {
    fn mul_assign(&mut self, s: C64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_jet(rng: &mut ChaCha8Rng, nvars: usize, order: usize) -> Jet {
        let n = coeff_count(nvars, order);
        let coeffs = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Jet::from_coeffs(nvars, order, coeffs).unwrap()
    }

    fn max_diff(a: &Jet, b: &Jet) -> f64 {
        (a - b).norm_inf()
    }

    #[test]
    fn counts_match_binomials() {
        for n in 1..=4 {
            for k in 0..=MAX_ORDER {
                let t = tables(n);
                let have = t
                    .exps
                    .iter()
                    .filter(|e| e.iter().map(|&x| x as usize).sum::<usize>() <= k)
                    .count();
                assert_eq!(have, coeff_count(n, k));
            }
        }
        assert_eq!(coeff_count(4, 4), 70);
        assert_eq!(coeff_count(3, 2), 10);
    }

    #[test]
    fn seed_product_is_cross_term() {
        let x = Jet::variable(4, 2, 0, 0.3);
        let y = Jet::variable(4, 2, 1, -0.7);
        let p = &x * &y;
        assert!((p.value() - c(-0.21, 0.0)).norm() < 1e-15);
        assert_eq!(p.coeff(&[1, 1, 0, 0]), c(1.0, 0.0));
        assert_eq!(p.coeff(&[2, 0, 0, 0]), c(0.0, 0.0));
        // zero base point: only the (1,1) coefficient survives above degree 0
        let p0 = Jet::variable(4, 2, 0, 0.0) * Jet::variable(4, 2, 1, 0.0);
        for i in 1..p0.coeffs().len() {
            let want = if p0.multi_index(i) == [1, 1, 0, 0] {
                1.0
            } else {
                0.0
            };
            assert_eq!(p0.coeffs()[i], c(want, 0.0));
        }
    }

    // brute-force polynomial product over explicit exponent maps
    fn brute_product(a: &Jet, b: &Jet) -> HashMap<Vec<u32>, C64> {
        let mut out: HashMap<Vec<u32>, C64> = HashMap::new();
        for i in 0..a.coeffs().len() {
            for j in 0..b.coeffs().len() {
                let ea = a.multi_index(i);
                let eb = b.multi_index(j);
                let s: Vec<u32> = ea.iter().zip(&eb).map(|(x, y)| x + y).collect();
                if s.iter().sum::<u32>() as usize <= a.order() {
                    *out.entry(s).or_default() += a.coeffs()[i] * b.coeffs()[j];
                }
            }
        }
        out
    }

    #[test]
    fn product_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(n, k) in &[(4, 2), (3, 3), (2, 4), (4, 4), (1, 6)] {
            let a = random_jet(&mut rng, n, k);
            let b = random_jet(&mut rng, n, k);
            let p = &a * &b;
            let want = brute_product(&a, &b);
            for i in 0..p.coeffs().len() {
                let w = want.get(&p.multi_index(i)).copied().unwrap_or_default();
                assert!((p.coeffs()[i] - w).norm() < 1e-14, "n={n} k={k} i={i}");
            }
        }
    }

    #[test]
    fn quotient_by_self_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = random_jet(&mut rng, 3, 4);
        a = a + c(2.0, 0.0);
        let q = jet_arith(&a, &a, ArithOp::Div).unwrap();
        assert!(max_diff(&q, &Jet::real(3, 4, 1.0)) < 1e-13);
    }

    #[test]
    fn strict_arith_errors() {
        let a = Jet::zero(3, 2);
        let b = Jet::zero(3, 3);
        let d = Jet::zero(4, 2);
        assert!(matches!(
            jet_arith(&a, &b, ArithOp::Add),
            Err(GeomError::OrderMismatch { .. })
        ));
        assert!(matches!(
            jet_arith(&a, &d, ArithOp::Mul),
            Err(GeomError::NvarsMismatch { .. })
        ));
        assert_eq!(
            jet_arith(&Jet::real(3, 2, 1.0), &a, ArithOp::Div),
            Err(GeomError::DivisionByZero)
        );
    }

    #[test]
    fn exp_log_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = random_jet(&mut rng, 4, 3).scale(c(0.2, 0.0));
        a.coeffs[0] = c(2.0, 0.0);
        let back = a.ln().unwrap().exp();
        assert!(max_diff(&back, &a) < 1e-13);
    }

    #[test]
    fn conj_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_jet(&mut rng, 4, 3);
        assert_eq!(a.conj().conj(), a);
        assert!(a.abs2().is_real(0.0));
        let b = random_jet(&mut rng, 4, 3);
        // conj is multiplicative on real-variable jets
        assert!(max_diff(&(&a * &b).conj(), &(a.conj() * b.conj())) < 1e-14);
    }

    #[test]
    fn branch_cut_is_rejected() {
        let neg = Jet::variable(3, 2, 0, -1.0);
        assert!(matches!(neg.ln(), Err(GeomError::BranchCut { .. })));
        assert!(matches!(neg.sqrt(), Err(GeomError::BranchCut { .. })));
        assert!(Jet::variable(3, 2, 0, 0.0).sqrt().is_err());
        assert!(Jet::real(3, 0, 0.0).sqrt().is_ok());
        let off = Jet::variable(3, 2, 0, -1.0) + c(0.0, 0.1);
        assert!(off.ln().is_ok());
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut a = random_jet(&mut rng, 3, 4).scale(c(0.3, 0.0));
        a.coeffs[0] = c(1.5, 0.4);
        let r = a.sqrt().unwrap();
        assert!(max_diff(&(&r * &r), &a) < 1e-13);
    }

    #[test]
    fn trig_pythagoras() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_jet(&mut rng, 4, 4);
        let s = a.sin();
        let co = a.cos();
        let one = &s * &s + &co * &co;
        assert!(max_diff(&one, &Jet::real(4, 4, 1.0)) < 1e-13);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut a = random_jet(&mut rng, 3, 3);
        a.coeffs[0] = c(1.2, -0.3);
        let cube = &(&a * &a) * &a;
        assert!(max_diff(&a.powi(3).unwrap(), &cube) < 1e-13);
        let inv3 = a.powi(-3).unwrap();
        assert!(max_diff(&(&inv3 * &cube), &Jet::real(3, 3, 1.0)) < 1e-12);
        assert!(max_diff(&a.powi(0).unwrap(), &Jet::real(3, 3, 1.0)) == 0.0);
    }

    #[test]
    fn partial_of_monomial() {
        // f = x^2 y at (1, 2): ∂x f = 2xy
        let x = Jet::variable(2, 3, 0, 1.0);
        let y = Jet::variable(2, 3, 1, 2.0);
        let f = &(&x * &x) * &y;
        let fx = f.partial(0).unwrap();
        assert_eq!(fx.order(), 2);
        let want = (&x * &y).scale(c(2.0, 0.0)).truncate(2);
        assert!(max_diff(&fx, &want) < 1e-15);
        assert!((f.derivative(&[2, 1]) - c(2.0, 0.0)).norm() < 1e-15);
        assert!(Jet::real(2, 0, 1.0).partial(0).is_err());
    }

    #[test]
    fn mixed_orders_truncate() {
        let a = Jet::variable(3, 4, 0, 1.0);
        let b = Jet::variable(3, 2, 1, 1.0);
        assert_eq!((&a * &b).order(), 2);
        assert_eq!((&a + &b).order(), 2);
    }

    // evaluate `f` composed with an affine path through the base point
    fn fd_check(f: JetFn, base: [f64; 3], dir_coeffs: [C64; 3]) {
        let order = 2;
        let build = |pt: [f64; 3], k: usize| -> Jet {
            let mut a = Jet::constant(3, k, c(0.3, 0.1));
            for v in 0..3 {
                a += Jet::variable(3, k, v, pt[v]).scale(dir_coeffs[v]);
            }
            a
        };
        let j = jet_fn(f, &build(base, order)).unwrap();
        let h1 = 1e-5;
        let h2 = 1e-4;
        let val = |pt: [f64; 3]| jet_fn(f, &build(pt, 0)).unwrap().value();
        for v in 0..3 {
            let mut p = base;
            let mut m = base;
            p[v] += h1;
            m[v] -= h1;
            let fd = (val(p) - val(m)) / (2.0 * h1);
            let got = j.gradient()[v];
            let scale = got.norm().max(1.0);
            assert!(
                (fd - got).norm() / scale < 1e-7,
                "{f:?} d{v}: {fd} vs {got}"
            );

            let mut p = base;
            let mut m = base;
            p[v] += h2;
            m[v] -= h2;
            let fd2 = (val(p) - val(base) * 2.0 + val(m)) / (h2 * h2);
            let mut alpha = [0u32; 3];
            alpha[v] = 2;
            let got2 = j.derivative(&alpha);
            let scale = got2.norm().max(1.0);
            assert!(
                (fd2 - got2).norm() / scale < 1e-5,
                "{f:?} d{v}d{v}: {fd2} vs {got2}"
            );
        }
    }

    #[test]
    fn elementary_functions_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let base = [
                rng.gen_range(0.5..1.5),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let dir = [
                c(rng.gen_range(0.1..0.5), rng.gen_range(-0.2..0.2)),
                c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
                c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
            ];
            for f in JetFn::ALL {
                fd_check(f, base, dir);
            }
        }
    }
}
