//! Exterior algebra on charts of dimension up to 4.
//!
//! Forms store coordinate-basis components indexed by strictly increasing
//! multi-indices, encoded as bit masks. Components are jets, so `d` is read
//! from jet gradients and costs one order.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use crate::error::{GeomError, Result};
use crate::exprlang::Expression;
use crate::jets::{check_shape, Jet, C64, MAX_VARS};

struct MaskTable {
    // masks[p] in lexicographic order of their index tuples
    masks: Vec<Vec<u8>>,
    position: [usize; 1 << MAX_VARS],
}

fn mask_table(dim: usize) -> &'static MaskTable {
    static TABLES: [OnceLock<MaskTable>; MAX_VARS] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    TABLES[dim - 1].get_or_init(|| {
        let mut masks = vec![Vec::new(); dim + 1];
        let mut all: Vec<u8> = (0..(1u8 << dim)).collect();
        all.sort_by_key(|&m| indices(m));
        for m in all {
            masks[m.count_ones() as usize].push(m);
        }
        let mut position = [usize::MAX; 1 << MAX_VARS];
        for list in &masks {
            for (i, &m) in list.iter().enumerate() {
                position[m as usize] = i;
            }
        }
        MaskTable { masks, position }
    })
}

/// Increasing index list of a mask.
pub fn indices(mask: u8) -> Vec<usize> {
    (0..8).filter(|k| mask & (1 << k) != 0).collect()
}

/// Masks of degree-`p` basis elements on a `dim`-chart, in storage order.
pub fn basis_masks(dim: usize, p: usize) -> &'static [u8] {
    &mask_table(dim).masks[p]
}

fn mask_position(dim: usize, mask: u8) -> usize {
    mask_table(dim).position[mask as usize]
}

/// Sign of `dx^A ∧ dx^B` relative to `dx^(A∪B)`; zero if they overlap.
pub fn wedge_sign(a: u8, b: u8) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut swaps = 0;
    for i in indices(a) {
        swaps += (b & ((1u8 << i) - 1)).count_ones();
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Coordinate identity jets at a point: the seeds every field is evaluated on.
#[derive(Debug, Clone)]
pub struct Seeds {
    point: Vec<f64>,
    order: usize,
    coords: Vec<Jet>,
}

impl Seeds {
    pub fn new(point: &[f64], order: usize) -> Result<Seeds> {
        check_shape(point.len(), order)?;
        let n = point.len();
        let coords = point
            .iter()
            .enumerate()
            .map(|(k, &x)| Jet::variable(n, order, k, x))
            .collect();
        Ok(Seeds {
            point: point.to_vec(),
            order,
            coords,
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.point.len()
    }

    pub fn coords(&self) -> &[Jet] {
        &self.coords
    }

    /// Same point at another order.
    pub fn with_order(&self, order: usize) -> Result<Seeds> {
        Seeds::new(&self.point, order)
    }

    pub fn constant(&self, v: C64) -> Jet {
        Jet::constant(self.nvars(), self.order, v)
    }

    pub fn real(&self, v: f64) -> Jet {
        Jet::real(self.nvars(), self.order, v)
    }
}

type ScalarFn = dyn Fn(&Seeds) -> Result<Jet> + Send + Sync;

/// A complex scalar field depending on the first `chart_dim` coordinates.
#[derive(Clone)]
pub struct ScalarField {
    chart_dim: usize,
    f: Arc<ScalarFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField(dim={})", self.chart_dim)
    }
}

impl ScalarField {
    pub fn new(
        chart_dim: usize,
        f: impl Fn(&Seeds) -> Result<Jet> + Send + Sync + 'static,
    ) -> ScalarField {
        ScalarField {
            chart_dim,
            f: Arc::new(f),
        }
    }

    pub fn from_expr(e: Expression) -> ScalarField {
        let dim = e.chart().len();
        ScalarField::new(dim, move |s| e.eval_seeded(&s.coords()[..dim]))
    }

    pub fn constant(chart_dim: usize, v: C64) -> ScalarField {
        ScalarField::new(chart_dim, move |s| Ok(s.constant(v)))
    }

    pub fn chart_dim(&self) -> usize {
        self.chart_dim
    }

    /// Evaluates on seeds whose first `chart_dim` coordinates are this field's chart.
    pub fn eval(&self, seeds: &Seeds) -> Result<Jet> {
        if seeds.nvars() < self.chart_dim {
            return Err(GeomError::PointDimension {
                got: seeds.nvars(),
                expected: self.chart_dim,
            });
        }
        (self.f)(seeds)
    }

    pub fn eval_at(&self, point: &[f64], order: usize) -> Result<Jet> {
        self.eval(&Seeds::new(point, order)?)
    }

    /// Pointwise combination with another field.
    pub fn zip(
        &self,
        other: &ScalarField,
        op: impl Fn(Jet, Jet) -> Result<Jet> + Send + Sync + 'static,
    ) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        ScalarField::new(self.chart_dim.max(other.chart_dim), move |s| {
            op(a.eval(s)?, b.eval(s)?)
        })
    }

    pub fn map(&self, op: impl Fn(Jet) -> Result<Jet> + Send + Sync + 'static) -> ScalarField {
        let a = self.clone();
        ScalarField::new(self.chart_dim, move |s| op(a.eval(s)?))
    }

    pub fn conj(&self) -> ScalarField {
        self.map(|j| Ok(j.conj()))
    }

    /// Partial derivative along coordinate `var`, as a field.
    pub fn partial(&self, var: usize) -> ScalarField {
        let a = self.clone();
        ScalarField::new(self.chart_dim, move |s| {
            a.eval(&s.with_order(s.order() + 1)?)?.partial(var)
        })
    }
}

impl ScalarField {
    pub fn scale(&self, k: C64) -> ScalarField {
        self.map(move |j| Ok(j.scale(k)))
    }

    pub fn re(&self) -> ScalarField {
        self.map(|j| Ok(j.re()))
    }

    pub fn recip(&self) -> ScalarField {
        self.map(|j| j.recip())
    }

    pub fn ln(&self) -> ScalarField {
        self.map(|j| j.ln())
    }

    pub fn powi(&self, n: i32) -> ScalarField {
        self.map(move |j| j.powi(n))
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip(rhs, |a, b| Ok(a + b))
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip(rhs, |a, b| Ok(a - b))
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip(rhs, |a, b| Ok(a * b))
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|a| Ok(-a))
    }
}

/// Value of a p-form at a point, with jet components.
#[derive(Debug, Clone, PartialEq)]
pub struct FormValue {
    dim: usize,
    degree: usize,
    comps: Vec<Jet>,
}

impl FormValue {
    pub fn zero(dim: usize, degree: usize, order: usize) -> FormValue {
        let n = binomial(dim, degree);
        FormValue {
            dim,
            degree,
            comps: vec![Jet::zero(dim, order); n],
        }
    }

    pub fn from_components(dim: usize, degree: usize, comps: Vec<Jet>) -> Result<FormValue> {
        if degree > dim || comps.len() != binomial(dim, degree) {
            return Err(GeomError::FormShape(format!(
                "{} components for a {degree}-form on a {dim}-chart",
                comps.len()
            )));
        }
        if comps.iter().any(|c| c.nvars() != dim) {
            return Err(GeomError::FormShape(
                "component jets over the wrong chart".into(),
            ));
        }
        Ok(FormValue { dim, degree, comps })
    }

    /// A 1-form `Σ a_k dx^k`.
    pub fn one_form(comps: Vec<Jet>) -> Result<FormValue> {
        let dim = comps.len();
        FormValue::from_components(dim, 1, comps)
    }

    pub fn scalar(f: Jet) -> FormValue {
        FormValue {
            dim: f.nvars(),
            degree: 0,
            comps: vec![f],
        }
    }

    /// The coordinate differential `dx^k` at the given order.
    pub fn coordinate(dim: usize, k: usize, order: usize) -> FormValue {
        let mut f = FormValue::zero(dim, 1, order);
        f.comps[k] = Jet::real(dim, order, 1.0);
        f
    }

    /// Differential of a scalar jet, one order lower.
    pub fn differential(f: &Jet) -> Result<FormValue> {
        let comps = (0..f.nvars())
            .map(|k| f.partial(k))
            .collect::<Result<Vec<_>>>()?;
        FormValue::one_form(comps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn components(&self) -> &[Jet] {
        &self.comps
    }

    pub fn masks(&self) -> &'static [u8] {
        basis_masks(self.dim, self.degree)
    }

    /// Component on the basis element with the given increasing indices.
    pub fn component(&self, idx: &[usize]) -> &Jet {
        let mask = idx.iter().fold(0u8, |m, &k| m | (1 << k));
        &self.comps[mask_position(self.dim, mask)]
    }

    /// Component values at the base point.
    pub fn values(&self) -> Vec<C64> {
        self.comps.iter().map(Jet::value).collect()
    }

    /// Largest component magnitude at the base point.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.value().norm())
            .fold(0.0, f64::max)
    }

    pub fn truncate(&self, order: usize) -> FormValue {
        self.map(|c| c.truncate(order))
    }

    pub fn conj(&self) -> FormValue {
        self.map(Jet::conj)
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> FormValue {
        FormValue {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, f: &Jet) -> FormValue {
        self.map(|c| c * f)
    }

    pub fn scale_c(&self, s: C64) -> FormValue {
        self.map(|c| c.scale(s))
    }

    fn check_same(&self, other: &FormValue) {
        assert!(
            self.dim == other.dim && self.degree == other.degree,
            "form shape mismatch: ({}, {}) vs ({}, {})",
            self.dim,
            self.degree,
            other.dim,
            other.degree
        );
    }

    /// Alternating product.
    pub fn wedge(&self, other: &FormValue) -> Result<FormValue> {
        if self.dim != other.dim {
            return Err(GeomError::FormShape(format!(
                "wedge across charts of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        let degree = self.degree + other.degree;
        if degree > self.dim {
            return Err(GeomError::DegreeOverflow {
                left: self.degree,
                right: other.degree,
                dim: self.dim,
            });
        }
        let order = self.order().min(other.order());
        let mut out = FormValue::zero(self.dim, degree, order);
        let ma = self.masks();
        let mb = other.masks();
        for (i, &a) in ma.iter().enumerate() {
            for (j, &b) in mb.iter().enumerate() {
                let sign = wedge_sign(a, b);
                if sign == 0 {
                    continue;
                }
                let pos = mask_position(self.dim, a | b);
                let term = &self.comps[i] * &other.comps[j];
                if sign > 0 {
                    out.comps[pos] += &term;
                } else {
                    out.comps[pos] -= &term;
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative; components come back one jet order lower.
    pub fn d(&self) -> Result<FormValue> {
        if self.order() == 0 {
            return Err(GeomError::OrderExhausted(
                "exterior derivative of order-0 form".into(),
            ));
        }
        if self.degree == self.dim {
            return Ok(FormValue::zero(self.dim, self.dim, self.order() - 1));
        }
        let order = self.order() - 1;
        let mut out = FormValue::zero(self.dim, self.degree + 1, order);
        for (i, &m) in self.masks().iter().enumerate() {
            for k in 0..self.dim {
                let sign = wedge_sign(1 << k, m);
                if sign == 0 {
                    continue;
                }
                let pos = mask_position(self.dim, m | (1 << k));
                let dk = self.comps[i].partial(k)?;
                if sign > 0 {
                    out.comps[pos] += &dk;
                } else {
                    out.comps[pos] -= &dk;
                }
            }
        }
        Ok(out)
    }

    /// The single component of a top-degree form.
    pub fn top(&self) -> Result<&Jet> {
        if self.degree != self.dim {
            return Err(GeomError::FormShape(format!(
                "expected a top-degree form, got degree {}",
                self.degree
            )));
        }
        Ok(&self.comps[0])
    }

    /// Jet-valued ratio `q` with `self = q · basis`, read from the basis component
    /// of largest magnitude. Exact for top-degree forms.
    pub fn ratio(&self, basis: &FormValue) -> Result<Jet> {
        self.check_same(basis);
        let (k, best) = basis
            .comps
            .iter()
            .enumerate()
            .map(|(k, c)| (k, c.value().norm()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == 0.0 {
            return Err(GeomError::ZeroBasis);
        }
        self.comps[k].try_div(&basis.comps[k])
    }
}

/// Result of reading a scalar coefficient out of a form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub value: C64,
    /// Largest component of `top − value·basis`; zero when proportional.
    pub residual: f64,
}

/// Least-squares `q` with `top ≈ q·basis` at the base point.
pub fn extract_coefficient(top: &FormValue, basis: &FormValue) -> Result<Coefficient> {
    if top.dim != basis.dim || top.degree != basis.degree {
        return Err(GeomError::FormShape(format!(
            "cannot compare a {}-form with a {}-form",
            top.degree, basis.degree
        )));
    }
    let b = basis.values();
    let t = top.values();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    if nb == 0.0 {
        return Err(GeomError::ZeroBasis);
    }
    let q = b.iter().zip(&t).map(|(bi, ti)| bi.conj() * ti).sum::<C64>() / nb;
    let residual = b
        .iter()
        .zip(&t)
        .map(|(bi, ti)| (ti - q * bi).norm())
        .fold(0.0, f64::max);
    Ok(Coefficient { value: q, residual })
}

impl Add for &FormValue {
    type Output = FormValue;
    fn add(self, rhs: &FormValue) -> FormValue {
        self.check_same(rhs);
        FormValue {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&rhs.comps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &FormValue {
    type Output = FormValue;
    fn sub(self, rhs: &FormValue) -> FormValue {
        self.check_same(rhs);
        FormValue {
            dim: self.dim,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&rhs.comps)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Add for FormValue {
    type Output = FormValue;
    fn add(self, rhs: FormValue) -> FormValue {
        &self + &rhs
    }
}

impl Sub for FormValue {
    type Output = FormValue;
    fn sub(self, rhs: FormValue) -> FormValue {
        &self - &rhs
    }
}

impl Neg for &FormValue {
    type Output = FormValue;
    fn neg(self) -> FormValue {
        self.map(|c| -c)
    }
}

impl Mul<&FormValue> for &Jet {
    type Output = FormValue;
    fn mul(self, rhs: &FormValue) -> FormValue {
        rhs.scale(self)
    }
}

/// A p-form field whose coefficients live on the first `chart_dim` coordinates.
#[derive(Debug, Clone)]
pub struct FormField {
    degree: usize,
    chart_dim: usize,
    comps: Vec<ScalarField>,
}

impl FormField {
    pub fn new(chart_dim: usize, degree: usize, comps: Vec<ScalarField>) -> Result<FormField> {
        if degree > chart_dim || comps.len() != binomial(chart_dim, degree) {
            return Err(GeomError::FormShape(format!(
                "{} coefficient fields for a {degree}-form on a {chart_dim}-chart",
                comps.len()
            )));
        }
        Ok(FormField {
            degree,
            chart_dim,
            comps,
        })
    }

    /// A 1-form from coefficient expressions, one per chart coordinate.
    pub fn one_form_from_exprs(exprs: Vec<Expression>) -> Result<FormField> {
        let dim = exprs.len();
        FormField::new(
            dim,
            1,
            exprs.into_iter().map(ScalarField::from_expr).collect(),
        )
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn chart_dim(&self) -> usize {
        self.chart_dim
    }

    pub fn coefficient_fields(&self) -> &[ScalarField] {
        &self.comps
    }

    /// Evaluates on (possibly larger) seeds; missing directions get zero components.
    pub fn eval(&self, seeds: &Seeds) -> Result<FormValue> {
        let n = seeds.nvars();
        if n < self.chart_dim {
            return Err(GeomError::PointDimension {
                got: n,
                expected: self.chart_dim,
            });
        }
        let mut out = FormValue::zero(n, self.degree, seeds.order());
        for (field, &mask) in self
            .comps
            .iter()
            .zip(basis_masks(self.chart_dim, self.degree))
        {
            out.comps[mask_position(n, mask)] = field.eval(seeds)?;
        }
        Ok(out)
    }

    pub fn eval_at(&self, point: &[f64], order: usize) -> Result<FormValue> {
        self.eval(&Seeds::new(point, order)?)
    }

    /// Exterior derivative at a point: evaluates at `order` and returns jets of `order − 1`.
    pub fn exterior_derivative(&self, point: &[f64], order: usize) -> Result<FormValue> {
        if order == 0 {
            return Err(GeomError::OrderExhausted(
                "exterior derivative needs order ≥ 1".into(),
            ));
        }
        self.eval_at(point, order)?.d()
    }
}
