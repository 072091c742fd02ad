//! Three-dimensional CR structures given by a real 1-form `λ` and a complex
//! 1-form `μ`, the dual operators `(∂₀, ∂, ∂̄)` and the scalar identities
//! built from them.
//!
//! A normalized structure satisfies `dλ = iμ∧μ̄ + (cμ + c̄μ̄)∧λ`, which
//! defines the structure function `c`. The reduced residuals also need
//! `dμ = 0`.
//!
//! Operators act on [`ScalarField`]s and return fields, so nesting them is
//! plain composition: each application evaluates its argument one jet order
//! higher than it is asked for.

use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::exprlang::parse;
use crate::forms::{indices, FormField, FormValue, ScalarField, Seeds};
use crate::jets::{Jet, C64, MAX_ORDER};
use crate::linalg::{invert, COND_LIMIT};

const I: C64 = C64::new(0.0, 1.0);

fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}

type FormFn = dyn Fn(&Seeds) -> Result<FormValue> + Send + Sync;

/// Dual vector fields of `(λ, μ, μ̄)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrOp {
    D0,
    Del,
    Delbar,
}

impl CrOp {
    pub const ALL: [CrOp; 3] = [CrOp::D0, CrOp::Del, CrOp::Delbar];

    pub fn name(self) -> &'static str {
        match self {
            CrOp::D0 => "d0",
            CrOp::Del => "del",
            CrOp::Delbar => "delbar",
        }
    }

    pub fn parse(s: &str) -> Option<CrOp> {
        CrOp::ALL.into_iter().find(|o| o.name() == s)
    }

    fn slot(self) -> usize {
        match self {
            CrOp::D0 => 0,
            CrOp::Del => 1,
            CrOp::Delbar => 2,
        }
    }
}

/// `ω(X)` for a 1-form and a vector given by its components.
fn pair1(w: &FormValue, x: &[Jet]) -> Jet {
    let mut acc = Jet::zero(w.dim(), w.order());
    for (k, wk) in w.components().iter().enumerate() {
        acc += &(wk * &x[k]);
    }
    acc
}

/// `F(X, Y)` for a 2-form.
fn pair2(f: &FormValue, x: &[Jet], y: &[Jet]) -> Jet {
    let mut acc = Jet::zero(f.dim(), f.order());
    for (comp, &m) in f.components().iter().zip(f.masks()) {
        let ab = indices(m);
        let (a, b) = (ab[0], ab[1]);
        acc += &(comp * &(&(&x[a] * &y[b]) - &(&x[b] * &y[a])));
    }
    acc
}

#[derive(Clone)]
pub struct CrStructure {
    chart: Arc<[String]>,
    lambda: Arc<FormFn>,
    mu: Arc<FormFn>,
    normalized: bool,
}

impl fmt::Debug for CrStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CrStructure({:?}, normalized={})",
            self.chart, self.normalized
        )
    }
}

/// Levi coefficient and `dμ` at a point, for checking a normalization claim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationReport {
    pub levi: f64,
    pub dmu: f64,
}

impl NormalizationReport {
    pub fn holds(&self) -> bool {
        (self.levi - 1.0).abs() < 1e-10 && self.dmu < 1e-11
    }
}

/// The structure function at a point with its consistency diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureFunction {
    pub c: C64,
    /// `|dλ(∂̄, ∂₀) − c̄|`
    pub conj_residual: f64,
    /// `|dλ(∂, ∂̄) − i|`
    pub levi_residual: f64,
    /// `∂c̄ − ∂̄c`, which vanishes for any valid structure.
    pub ee0: C64,
}

/// Closed-form type III / type N quantities at one point of the lift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeIII {
    pub i: C64,
    /// `∂Ī`
    pub del_i_bar: C64,
    pub r33: C64,
    pub psi3: C64,
    /// `Ψ₄` in the type N case, `2i ∂₀Ī e^{−i(r+s)/2} cos³((r+s)/2) / p²`.
    pub psi4_type_n: C64,
}

impl TypeIII {
    pub fn type_n_candidate(&self, tol: f64) -> bool {
        self.del_i_bar.norm() < tol
    }
}

/// Output of [`CrStructure::gauge_transform`].
#[derive(Debug, Clone)]
pub struct Gauge {
    pub cr: CrStructure,
    /// `h(c − t₀ − ∂log(hh̄))`
    pub c: ScalarField,
    /// `h(t − t₀)`
    pub t: ScalarField,
}

impl CrStructure {
    pub fn new(chart: &[&str], lambda: FormField, mu: FormField) -> Result<CrStructure> {
        if chart.len() != 3 {
            return Err(GeomError::PointDimension {
                got: chart.len(),
                expected: 3,
            });
        }
        for f in [&lambda, &mu] {
            if f.degree() != 1 || f.chart_dim() != 3 {
                return Err(GeomError::FormShape(
                    "λ and μ must be 1-forms on the 3-chart".into(),
                ));
            }
        }
        Ok(CrStructure::from_fns(
            chart,
            move |s| lambda.eval(s),
            move |s| mu.eval(s),
            false,
        ))
    }

    pub fn from_exprs(chart: &[&str], lambda: &[&str], mu: &[&str]) -> Result<CrStructure> {
        let field = |src: &[&str]| -> Result<FormField> {
            let exprs = src
                .iter()
                .map(|e| parse(e, chart))
                .collect::<Result<Vec<_>>>()?;
            FormField::one_form_from_exprs(exprs)
        };
        CrStructure::new(chart, field(lambda)?, field(mu)?)
    }

    fn from_fns(
        chart: &[&str],
        lambda: impl Fn(&Seeds) -> Result<FormValue> + Send + Sync + 'static,
        mu: impl Fn(&Seeds) -> Result<FormValue> + Send + Sync + 'static,
        normalized: bool,
    ) -> CrStructure {
        CrStructure {
            chart: chart.iter().map(|s| s.to_string()).collect(),
            lambda: Arc::new(lambda),
            mu: Arc::new(mu),
            normalized,
        }
    }

    pub fn chart(&self) -> &[String] {
        &self.chart
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Marks the pair as normalized without rescaling. The caller vouches for
    /// `ω ≡ 1`; [`CrStructure::normalization_report`] checks it at a point.
    pub fn assume_normalized(mut self) -> CrStructure {
        self.normalized = true;
        self
    }

    /// `λ` on the seeds (any dimension ≥ 3; extra directions get zero components).
    pub fn lambda(&self, seeds: &Seeds) -> Result<FormValue> {
        (self.lambda)(seeds)
    }

    pub fn mu(&self, seeds: &Seeds) -> Result<FormValue> {
        (self.mu)(seeds)
    }

    fn require_normalized(&self) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(GeomError::NotNormalized(
                "Levi coefficient not normalized to 1".into(),
            ))
        }
    }

    fn require_closed_mu(&self, point: &[f64]) -> Result<()> {
        let dmu = self.mu(&Seeds::new(point, 1)?)?.d()?.max_abs();
        if dmu > 1e-11 {
            return Err(GeomError::NotNormalized(format!(
                "dμ = {dmu:e} ≠ 0; μ must be closed"
            )));
        }
        Ok(())
    }

    /// Levi coefficient `ω` with `λ∧dλ = iω λ∧μ∧μ̄`, as a jet of the seeds' order.
    pub fn levi_jet(&self, seeds: &Seeds) -> Result<Jet> {
        let up = seeds.with_order(seeds.order() + 1)?;
        let lam = self.lambda(&up)?;
        let dl = lam.d()?;
        let lam = lam.truncate(seeds.order());
        let mu = self.mu(seeds)?;
        let vol = lam.wedge(&mu)?.wedge(&mu.conj())?.scale_c(I);
        lam.wedge(&dl)?.ratio(&vol)
    }

    pub fn levi_field(&self) -> ScalarField {
        let cr = self.clone();
        ScalarField::new(3, move |s| cr.levi_jet(s))
    }

    /// Real Levi coefficient at a point.
    pub fn levi_coefficient(&self, point: &[f64]) -> Result<f64> {
        let w = self.levi_jet(&Seeds::new(point, 0)?)?.value();
        if w.im.abs() > 1e-10 * w.norm().max(1.0) {
            return Err(GeomError::DomainGuard(format!(
                "Levi coefficient not real: {w}"
            )));
        }
        Ok(w.re)
    }

    /// `λ' = λ/ω`; evaluation fails where `ω` vanishes.
    pub fn normalize(&self) -> CrStructure {
        if self.normalized {
            return self.clone();
        }
        let base = self.clone();
        let chart: Vec<&str> = self.chart.iter().map(String::as_str).collect();
        let mu = self.mu.clone();
        CrStructure::from_fns(
            &chart,
            move |s| {
                let w = base.levi_jet(s)?;
                if w.value().norm() < 1e-12 {
                    return Err(GeomError::FieldVanishes {
                        field: "Levi coefficient",
                    });
                }
                Ok(base.lambda(s)?.scale(&w.recip()?))
            },
            move |s| mu(s),
            true,
        )
    }

    pub fn normalization_report(&self, point: &[f64]) -> Result<NormalizationReport> {
        Ok(NormalizationReport {
            levi: self.levi_coefficient(point)?,
            dmu: self.mu(&Seeds::new(point, 1)?)?.d()?.max_abs(),
        })
    }

    /// `(∂₀, ∂, ∂̄)` as component vectors over the seeds' coordinates.
    pub fn dual_frame(&self, seeds: &Seeds) -> Result<[Vec<Jet>; 3]> {
        let n = seeds.nvars();
        if n < 3 {
            return Err(GeomError::PointDimension {
                got: n,
                expected: 3,
            });
        }
        let lam = self.lambda(seeds)?;
        let mu = self.mu(seeds)?;
        let mub = mu.conj();
        let rows: Vec<Vec<Jet>> = [&lam, &mu, &mub]
            .iter()
            .map(|f| f.components()[..3].to_vec())
            .collect();
        let (inv, cond) = invert(&rows)?;
        if cond > COND_LIMIT {
            return Err(GeomError::SingularFrame { cond });
        }
        let order = seeds.order();
        let vec = |j: usize| -> Vec<Jet> {
            (0..n)
                .map(|k| {
                    if k < 3 {
                        inv[k][j].clone()
                    } else {
                        Jet::zero(n, order)
                    }
                })
                .collect()
        };
        Ok([vec(0), vec(1), vec(2)])
    }

    /// Largest deviation of the pairing of `(∂₀, ∂, ∂̄)` with `(λ, μ, μ̄)` from the identity.
    pub fn duality_residual(&self, point: &[f64]) -> Result<f64> {
        let seeds = Seeds::new(point, 0)?;
        let e = self.dual_frame(&seeds)?;
        let mu = self.mu(&seeds)?;
        let forms = [self.lambda(&seeds)?, mu.conj(), mu];
        let forms = [&forms[0], &forms[2], &forms[1]];
        let mut worst: f64 = 0.0;
        for (a, f) in forms.iter().enumerate() {
            for (b, v) in e.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((pair1(f, v).value() - want).norm());
            }
        }
        Ok(worst)
    }

    /// The operator applied to a field, as a field.
    pub fn apply(&self, op: CrOp, f: &ScalarField) -> ScalarField {
        let cr = self.clone();
        let f = f.clone();
        ScalarField::new(3, move |s| {
            let k = s.order();
            if k + 1 > MAX_ORDER {
                return Err(GeomError::OrderExhausted(format!(
                    "{} needs its argument at order {}",
                    op.name(),
                    k + 1
                )));
            }
            let fj = f.eval(&s.with_order(k + 1)?)?;
            let e = cr.dual_frame(s)?;
            let v = &e[op.slot()];
            let mut acc = s.constant(c64(0.0));
            for (j, vj) in v.iter().enumerate().take(3) {
                acc += &(vj * &fj.partial(j)?);
            }
            Ok(acc)
        })
    }

    pub fn d0(&self, f: &ScalarField) -> ScalarField {
        self.apply(CrOp::D0, f)
    }

    pub fn del(&self, f: &ScalarField) -> ScalarField {
        self.apply(CrOp::Del, f)
    }

    pub fn delbar(&self, f: &ScalarField) -> ScalarField {
        self.apply(CrOp::Delbar, f)
    }

    /// One operator applied to `f` at a point, as a jet of the given order.
    pub fn cr_apply(&self, f: &ScalarField, op: CrOp, point: &[f64], order: usize) -> Result<Jet> {
        self.apply(op, f).eval_at(point, order)
    }

    /// `c = dλ(∂, ∂₀)` as a field.
    pub fn c_field(&self) -> ScalarField {
        let cr = self.clone();
        ScalarField::new(3, move |s| {
            cr.require_normalized()?;
            let dl = cr.lambda(&s.with_order(s.order() + 1)?)?.d()?;
            let e = cr.dual_frame(s)?;
            Ok(pair2(&dl, &e[1], &e[0]))
        })
    }

    pub fn structure_function_c(&self, point: &[f64]) -> Result<StructureFunction> {
        self.require_normalized()?;
        let s = Seeds::new(point, 0)?;
        let dl = self.lambda(&s.with_order(1)?)?.d()?;
        let e = self.dual_frame(&s)?;
        let c = pair2(&dl, &e[1], &e[0]).value();
        let cb = pair2(&dl, &e[2], &e[0]).value();
        let levi = pair2(&dl, &e[1], &e[2]).value();
        let cf = self.c_field();
        let ee0 = (&self.del(&cf.conj()) - &self.delbar(&cf))
            .eval_at(point, 0)?
            .value();
        Ok(StructureFunction {
            c,
            conj_residual: (cb - c.conj()).norm(),
            levi_residual: (levi - I).norm(),
            ee0,
        })
    }

    /// `(∂₀∂ − ∂∂₀)f − c∂₀f` at a point.
    pub fn commutator_residual(&self, f: &ScalarField, point: &[f64]) -> Result<C64> {
        self.require_normalized()?;
        self.require_closed_mu(point)?;
        let d0f = self.d0(f);
        let r = &(&self.d0(&self.del(f)) - &self.del(&d0f)) - &(&self.c_field() * &d0f);
        Ok(r.eval_at(point, 0)?.value())
    }

    /// `∂t + (c − t)t`
    pub fn ee5_field(&self, t: &ScalarField) -> ScalarField {
        &self.del(t) + &(&(&self.c_field() - t) * t)
    }

    pub fn residual_ee5(&self, t: &ScalarField, point: &[f64]) -> Result<C64> {
        self.require_normalized()?;
        self.require_closed_mu(point)?;
        Ok(self.ee5_field(t).eval_at(point, 0)?.value())
    }

    /// Coefficient of `μ∧μ̄∧λ` in `dφ∧φ` for `φ = μ + it̄λ`, by exterior calculus.
    pub fn second_cr_form_residual(&self, t: &ScalarField, point: &[f64]) -> Result<C64> {
        self.require_normalized()?;
        self.require_closed_mu(point)?;
        let s = Seeds::new(point, 1)?;
        let lam = self.lambda(&s)?;
        let mu = self.mu(&s)?;
        let tb = t.eval(&s)?.conj().scale(I);
        let phi = &mu + &lam.scale(&tb);
        let top = phi.d()?.wedge(&phi.truncate(0))?;
        let basis = mu.wedge(&mu.conj())?.wedge(&lam)?.truncate(0);
        Ok(top.ratio(&basis)?.value())
    }

    /// `Δ_CR = ∂∂̄ + ∂̄∂ + c∂̄ + c̄∂ + ½cc̄ + ⅜(∂c̄ + ∂̄c)`
    pub fn cr_laplacian_field(&self, f: &ScalarField) -> ScalarField {
        let c = self.c_field();
        let cb = c.conj();
        let second = &self.del(&self.delbar(f)) + &self.delbar(&self.del(f));
        let first = &(&c * &self.delbar(f)) + &(&cb * &self.del(f));
        let pot = &(&c * &cb).scale(c64(0.5))
            + &(&self.del(&cb) + &self.delbar(&c)).scale(c64(3.0 / 8.0));
        &(&second + &first) + &(&pot * f)
    }

    /// Real `Δ_CR f` at a point.
    pub fn cr_laplacian(&self, f: &ScalarField, point: &[f64]) -> Result<f64> {
        self.require_normalized()?;
        let v = self.cr_laplacian_field(f).eval_at(point, 0)?.value();
        if v.im.abs() > 1e-10 * v.norm().max(1.0) {
            return Err(GeomError::DomainGuard(format!("Δ_CR f not real: {v}")));
        }
        Ok(v.re)
    }

    /// Left side of the second-order equation for `p`:
    /// `[Δ_CR + ⅜(∂c̄ + ∂̄c) − (3/2)(∂t̄ + ∂̄t + tt̄)] p`.
    pub fn ee7_operator(&self, p: &ScalarField, t: &ScalarField) -> ScalarField {
        let c = self.c_field();
        let tb = t.conj();
        let extra = &(&self.del(&c.conj()) + &self.delbar(&c)).scale(c64(3.0 / 8.0))
            - &(&(&self.del(&tb) + &self.delbar(t)) + &(t * &tb)).scale(c64(1.5));
        &self.cr_laplacian_field(p) + &(&extra * p)
    }

    /// `L p − (m + m̄)/p³ − ⅔Λp³` with `L` the operator of [`CrStructure::ee7_operator`].
    pub fn ee7_field(
        &self,
        p: &ScalarField,
        t: &ScalarField,
        m: &ScalarField,
        lambda: f64,
    ) -> ScalarField {
        let rhs = &(&(m + &m.conj()) * &p.powi(-3)) + &p.powi(3).scale(c64(2.0 * lambda / 3.0));
        &self.ee7_operator(p, t) - &rhs
    }

    pub fn residual_ee7(
        &self,
        p: &ScalarField,
        t: &ScalarField,
        m: &ScalarField,
        lambda: f64,
        point: &[f64],
    ) -> Result<C64> {
        self.require_normalized()?;
        self.require_closed_mu(point)?;
        check_p(p, point)?;
        Ok(self.ee7_field(p, t, m, lambda).eval_at(point, 0)?.value())
    }

    /// `∂m + 3(c − t)m`
    pub fn ee8_field(&self, m: &ScalarField, t: &ScalarField) -> ScalarField {
        &self.del(m) + &(&(&self.c_field() - t) * m).scale(c64(3.0))
    }

    pub fn residual_ee8(&self, m: &ScalarField, t: &ScalarField, point: &[f64]) -> Result<C64> {
        self.require_normalized()?;
        self.require_closed_mu(point)?;
        Ok(self.ee8_field(m, t).eval_at(point, 0)?.value())
    }

    /// `∂f̄ + cf̄`
    pub fn nbm_field(&self, f: &ScalarField) -> ScalarField {
        let fb = f.conj();
        &self.del(&fb) + &(&self.c_field() * &fb)
    }

    pub fn residual_maxwell_nbm(&self, f: &ScalarField, point: &[f64]) -> Result<C64> {
        self.require_normalized()?;
        self.require_closed_mu(point)?;
        Ok(self.nbm_field(f).eval_at(point, 0)?.value())
    }

    /// Coefficient of `λ∧μ∧μ̄` in `d(fλ∧μ)`; equals the conjugate of the
    /// `∂f̄ + cf̄` residual when `μ` is closed.
    pub fn maxwell_form_coefficient(&self, f: &ScalarField, point: &[f64]) -> Result<C64> {
        let s = Seeds::new(point, 1)?;
        let lam = self.lambda(&s)?;
        let mu = self.mu(&s)?;
        let form = lam.wedge(&mu)?.scale(&f.eval(&s)?);
        let basis = lam.wedge(&mu)?.wedge(&mu.conj())?.truncate(0);
        Ok(form.d()?.ratio(&basis)?.value())
    }

    /// `∂∂̄∂c + 3c∂̄∂c − 7ic∂₀c − 3i∂∂₀c + (∂c + 2c²)∂̄c`
    pub fn cartan_field(&self) -> ScalarField {
        let c = self.c_field();
        let dc = self.del(&c);
        let dbdc = self.delbar(&dc);
        let d0c = self.d0(&c);
        let a = self.del(&dbdc);
        let b = (&c * &dbdc).scale(c64(3.0));
        let e = (&c * &d0c).scale(C64::new(0.0, -7.0));
        let f = self.del(&d0c).scale(C64::new(0.0, -3.0));
        let g = &(&dc + &(&c * &c).scale(c64(2.0))) * &self.delbar(&c);
        &(&(&a + &b) + &(&e + &f)) + &g
    }

    pub fn cartan_invariant(&self, point: &[f64]) -> Result<C64> {
        self.require_normalized()?;
        Ok(self.cartan_field().eval_at(point, 0)?.value())
    }

    /// True when the invariant vanishes at every sample.
    pub fn heisenberg_equivalent(&self, samples: &[Vec<f64>], tol: f64) -> Result<bool> {
        for x in samples {
            if self.cartan_invariant(x)?.norm() > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `op(log p)` computed as `op(p)/p`, so negative `p` is allowed.
    pub fn log_derivative(&self, op: CrOp, p: &ScalarField) -> ScalarField {
        &self.apply(op, p) * &p.recip()
    }

    /// `I = ∂(∂log p + c) + (∂log p + c)²`
    pub fn i_field(&self, p: &ScalarField) -> ScalarField {
        let g = &self.log_derivative(CrOp::Del, p) + &self.c_field();
        &self.del(&g) + &(&g * &g)
    }

    /// Closed forms for `R₃₃`, `Ψ₃` and type N `Ψ₄` at fibre coordinate `r`
    /// and phase `s`. The `Λ` addends are included when `lambda ≠ 0`.
    pub fn type_iii_invariants(
        &self,
        p: &ScalarField,
        r: f64,
        s: f64,
        lambda: f64,
        point: &[f64],
    ) -> Result<TypeIII> {
        self.require_normalized()?;
        check_p(p, point)?;
        let i_f = self.i_field(p);
        let ib = i_f.conj();
        let dib = self.del(&ib);
        let p2 = p * p;
        let c = self.c_field();
        let inner = &p2 * &dib;
        let r33_core = &self.del(&inner) + &(&c * &inner).scale(c64(2.0));
        let half = 0.5 * (r + s);
        let (cs, ph) = (half.cos(), C64::from_polar(1.0, half));
        let pv = p.eval_at(point, 0)?.value();
        let mut r33 = r33_core.eval_at(point, 0)?.value() * 8.0 * cs.powi(4) / pv.powi(4);
        let dib_v = dib.eval_at(point, 0)?.value();
        let mut psi3 = 2.0 * I * dib_v * ph * cs.powi(3) / (pv * pv);
        if lambda != 0.0 {
            let cb = c.conj();
            let dl = self.log_derivative(CrOp::Del, p);
            let dbl = self.log_derivative(CrOp::Delbar, p);
            let bracket = &(&(&p2.scale(c64(4.0 * lambda / 3.0))
                + &(&(&cb * &dl) + &(&c * &dbl)).scale(c64(6.0)))
                + &(&(&dl * &dbl).scale(c64(12.0)) + &(&c * &cb).scale(c64(3.0))))
                - &(&(&self.del(&cb) + &self.delbar(&c)).scale(c64(0.5))
                    + &self.log_derivative(CrOp::D0, p).scale(C64::new(0.0, 2.0)));
            r33 += -8.0 * lambda * cs.powi(4) * bracket.eval_at(point, 0)?.value();
            let t = (&dbl.scale(c64(2.0)) + &cb).eval_at(point, 0)?.value();
            psi3 += -4.0 * I * lambda * t * ph * cs.powi(3);
        }
        let d0ib = self.d0(&ib).eval_at(point, 0)?.value();
        Ok(TypeIII {
            i: i_f.eval_at(point, 0)?.value(),
            del_i_bar: dib_v,
            r33,
            psi3,
            psi4_type_n: 2.0 * I * d0ib * ph.conj() * cs.powi(3) / (pv * pv),
        })
    }

    /// `μ' = h⁻¹(μ + it̄₀λ)`, `λ' = |h|⁻²λ` with the transformed `c` and `t`.
    pub fn gauge_transform(&self, t: &ScalarField, h: &ScalarField, t0: &ScalarField) -> Gauge {
        let chart: Vec<&str> = self.chart.iter().map(String::as_str).collect();
        let (lam_cr, mu_cr) = (self.clone(), self.clone());
        let (h_l, h_m, t0_m) = (h.clone(), h.clone(), t0.clone());
        let hval = move |h: &ScalarField, s: &Seeds| -> Result<Jet> {
            let v = h.eval(s)?;
            if v.value().norm() < 1e-300 {
                return Err(GeomError::FieldVanishes { field: "h" });
            }
            Ok(v)
        };
        let cr = CrStructure::from_fns(
            &chart,
            move |s| {
                let hv = hval(&h_l, s)?;
                Ok(lam_cr.lambda(s)?.scale(&hv.abs2().recip()?))
            },
            move |s| {
                let hv = hval(&h_m, s)?;
                let shift = t0_m.eval(s)?.conj().scale(I);
                let lam = mu_cr.lambda(s)?;
                Ok((&mu_cr.mu(s)? + &lam.scale(&shift)).scale(&hv.recip()?))
            },
            self.normalized,
        );
        let hh = (h * &h.conj()).ln();
        let c = h * &(&(&self.c_field() - t0) - &self.del(&hh));
        let t = h * &(t - t0);
        Gauge { cr, c, t }
    }
}

fn check_p(p: &ScalarField, point: &[f64]) -> Result<()> {
    let v = p.eval_at(point, 0)?.value();
    if v.norm() < 1e-12 {
        return Err(GeomError::FieldVanishes { field: "p" });
    }
    if v.im.abs() > 1e-10 * v.norm() {
        return Err(GeomError::DomainGuard(format!("p must be real, got {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CHART: [&str; 3] = ["u", "x", "y"];

    fn heisenberg() -> CrStructure {
        CrStructure::from_exprs(&CHART, &["1", "-y", "x"], &["0", "1", "i"])
            .unwrap()
            .assume_normalized()
    }

    fn field(src: &str) -> ScalarField {
        ScalarField::from_expr(parse(src, &CHART).unwrap())
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn random_field(rng: &mut ChaCha8Rng) -> ScalarField {
        let mut k = || rng.gen_range(-1.0..1.0);
        let src = format!(
            "({:.5} + i*{:.5})*sin({:.5}*u + {:.5}*x + {:.5}*y) + {:.5}*x*y*u + exp({:.5}*x - i*{:.5}*u)",
            k(), k(), k(), k(), k(), k(), k(), k()
        );
        field(&src)
    }

    #[test]
    fn heisenberg_duality_and_c() {
        let cr = heisenberg();
        let x = [0.3, -0.4, 0.7];
        assert!(cr.duality_residual(&x).unwrap() < 1e-12);
        let rep = cr.normalization_report(&x).unwrap();
        assert!(rep.holds(), "{rep:?}");
        let one = |f: &str, op, want: C64| {
            let v = cr.cr_apply(&field(f), op, &x, 0).unwrap().value();
            assert!(close(v, want, 1e-12), "{op:?} {f}: {v}");
        };
        one("u", CrOp::D0, c64(1.0));
        one("x + i*y", CrOp::Del, c64(1.0));
        one("x + i*y", CrOp::Delbar, c64(0.0));
        // u + i|z|²/2 is a CR function
        one("u + i*(x^2 + y^2)/2", CrOp::Delbar, c64(0.0));
        let sf = cr.structure_function_c(&x).unwrap();
        assert!(sf.c.norm() < 1e-14 && sf.levi_residual < 1e-14 && sf.ee0.norm() < 1e-14);
        assert!(cr.cartan_invariant(&x).unwrap().norm() < 1e-13);
    }

    #[test]
    fn levi_coefficient_and_normalization() {
        let scaled =
            CrStructure::from_exprs(&CHART, &["5", "-5*y", "5*x"], &["0", "1", "i"]).unwrap();
        let x = [0.1, 0.2, -0.3];
        assert!((scaled.levi_coefficient(&x).unwrap() - 5.0).abs() < 1e-12);
        assert!(scaled.c_field().eval_at(&x, 0).is_err());
        let n = scaled.normalize();
        assert!((n.levi_coefficient(&x).unwrap() - 1.0).abs() < 1e-12);
        // λ = du + i(z̄dz − z dz̄) has ω = −2
        let rob = CrStructure::from_exprs(&CHART, &["1", "2*y", "-2*x"], &["0", "1", "i"]).unwrap();
        assert!((rob.levi_coefficient(&x).unwrap() + 2.0).abs() < 1e-12);
        let rn = rob.normalize();
        assert!((rn.levi_coefficient(&x).unwrap() - 1.0).abs() < 1e-12);
        // Levi-flat: λ = du
        let flat = CrStructure::from_exprs(&CHART, &["1", "0", "0"], &["0", "1", "i"]).unwrap();
        assert_eq!(flat.levi_coefficient(&x).unwrap(), 0.0);
        assert!(matches!(
            flat.normalize().lambda(&Seeds::new(&x, 0).unwrap()),
            Err(GeomError::FieldVanishes { .. })
        ));
    }

    #[test]
    fn conformal_rescale_shifts_c() {
        // λ' = e^g λ_H with μ' = e^{g/2} μ keeps ω = 1; here g = g(x) only and
        // μ' is not closed, but c is still read off dλ'.
        // Hand computation: dλ' = dg∧λ' + e^g dλ_H, so with μ' = e^{g/2}μ,
        // c' = e^{-g/2} ∂_z g = e^{-g/2} g'(x)/2.
        let g = "0.3*x^2";
        let lam = [
            format!("exp({g})"),
            format!("-y*exp({g})"),
            format!("x*exp({g})"),
        ];
        let mu = [
            "0".to_string(),
            format!("exp({g}/2)"),
            format!("i*exp({g}/2)"),
        ];
        let l: Vec<&str> = lam.iter().map(String::as_str).collect();
        let m: Vec<&str> = mu.iter().map(String::as_str).collect();
        let cr = CrStructure::from_exprs(&CHART, &l, &m)
            .unwrap()
            .assume_normalized();
        let x = [0.2, 0.5, -0.1];
        assert!((cr.levi_coefficient(&x).unwrap() - 1.0).abs() < 1e-12);
        let sf = cr.structure_function_c(&x).unwrap();
        let want = (-0.15 * x[1] * x[1]).exp() * 0.3 * x[1];
        assert!(close(sf.c, c64(want), 1e-12), "{}", sf.c);
        assert!(sf.conj_residual < 1e-12 && sf.levi_residual < 1e-12);
    }

    /// λ = du + A dz + Ā dz̄ with A = z̄(−εu + iG(|z|²)), G(s) = (1 − e^{εs})/(2εs);
    /// this keeps ω = 1, μ = dz closed, and gives c = εz̄ exactly.
    fn eps_family(eps: f64) -> CrStructure {
        let g = format!("((1 - exp({eps}*(x^2 + y^2)))/(2*{eps}*(x^2 + y^2)))");
        // A dz + Ā dz̄ = 2 Re(A) dx − 2 Im(A) dy
        // A = (x − iy)(−εu + iG) ⇒ Re A = −εux + Gy, Im A = εuy + Gx
        let lx = format!("2*(-{eps}*u*x + {g}*y)");
        let ly = format!("-2*({eps}*u*y + {g}*x)");
        CrStructure::from_exprs(&CHART, &["1", &lx, &ly], &["0", "1", "i"])
            .unwrap()
            .assume_normalized()
    }

    #[test]
    fn eps_family_c_and_cartan() {
        let eps = 0.4;
        let cr = eps_family(eps);
        for x in [[0.3, 0.5, -0.2], [-0.7, -0.4, 0.9]] {
            let rep = cr.normalization_report(&x).unwrap();
            assert!(rep.holds(), "{rep:?}");
            let zb = C64::new(x[1], -x[2]);
            let sf = cr.structure_function_c(&x).unwrap();
            assert!(close(sf.c, zb * eps, 1e-11), "{}", sf.c);
            assert!(sf.ee0.norm() < 1e-9);
            // only (∂c + 2c²)∂̄c survives: 2ε³z̄²
            let cart = cr.cartan_invariant(&x).unwrap();
            assert!(close(cart, 2.0 * eps.powi(3) * zb * zb, 1e-8), "{cart}");
        }
    }

    #[test]
    fn commutator_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = [0.25, 0.4, -0.35];
        for cr in [heisenberg(), eps_family(0.5)] {
            for _ in 0..5 {
                let f = random_field(&mut rng);
                assert!(cr.commutator_residual(&f, &x).unwrap().norm() < 1e-8);
            }
        }
    }

    #[test]
    fn second_form_matches_ee5() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = [-0.2, 0.45, 0.3];
        let cr = eps_family(0.3);
        let zero = ScalarField::constant(3, c64(0.0));
        assert_eq!(cr.residual_ee5(&zero, &x).unwrap(), c64(0.0));
        for _ in 0..5 {
            let t = random_field(&mut rng);
            let a = cr.second_cr_form_residual(&t, &x).unwrap();
            let b = cr.residual_ee5(&t, &x).unwrap();
            assert!(close(a, I * b.conj(), 1e-10), "{a} vs {b}");
        }
    }

    #[test]
    fn ee7_examples() {
        let cr = heisenberg();
        let x = [0.1, -0.3, 0.2];
        let zero = ScalarField::constant(3, c64(0.0));
        let one = ScalarField::constant(3, c64(1.0));
        let im = ScalarField::constant(3, C64::new(0.0, 2.5));
        assert!(cr.residual_ee7(&one, &zero, &im, 0.0, &x).unwrap().norm() < 1e-14);
        let r = cr.residual_ee7(&one, &zero, &one, 0.0, &x).unwrap();
        assert!(close(r, c64(-2.0), 1e-14));
        // (∂∂̄ + ∂̄∂)|z|² = 2 on Heisenberg
        let zz = field("x^2 + y^2");
        assert!((cr.cr_laplacian(&zz, &x).unwrap() - 2.0).abs() < 1e-12);
        assert!(cr.cr_laplacian(&one, &x).unwrap().abs() < 1e-14);
        // linear part is Δ_CR + ⅜(∂c̄ + ∂̄c) when t = 0
        let fam = eps_family(0.6);
        let p = field("1.3 + 0.2*sin(u + x) + 0.1*x*y");
        let lin = fam.ee7_operator(&p, &zero).eval_at(&x, 0).unwrap().value();
        let lap = fam.cr_laplacian_field(&p).eval_at(&x, 0).unwrap().value();
        // ∂c̄ + ∂̄c = 2ε on this family
        let want = lap + 3.0 / 8.0 * 2.0 * 0.6 * p.eval_at(&x, 0).unwrap().value();
        assert!(close(lin, want, 1e-9), "{lin} vs {want}");
    }

    /// Heisenberg seen through the CR function `z + z²/2`: λ' = |1+z|²λ_H,
    /// μ' = (1+z)dz, which is normalized with `c = (1+z)⁻²` per the gauge law.
    fn gauged_heisenberg() -> Gauge {
        let h = field("1/(1 + x + i*y)");
        let zero = ScalarField::constant(3, c64(0.0));
        heisenberg().gauge_transform(&zero, &h, &zero)
    }

    #[test]
    fn gauge_transform_laws() {
        let x = [0.3, 0.2, -0.4];
        let zero = ScalarField::constant(3, c64(0.0));
        let one = ScalarField::constant(3, c64(1.0));
        let cr = eps_family(0.3);
        let id = cr.gauge_transform(&zero, &one, &zero);
        let s = Seeds::new(&x, 1).unwrap();
        assert_eq!(id.cr.lambda(&s).unwrap(), cr.lambda(&s).unwrap());
        assert_eq!(id.cr.mu(&s).unwrap(), cr.mu(&s).unwrap());

        let g = gauged_heisenberg();
        let rep = g.cr.normalization_report(&x).unwrap();
        assert!(rep.holds(), "{rep:?}");
        let z1 = C64::new(1.0 + x[1], x[2]);
        let want = z1.powi(-2);
        let computed = g.cr.structure_function_c(&x).unwrap().c;
        let law = g.c.eval_at(&x, 0).unwrap().value();
        assert!(
            close(computed, want, 1e-11) && close(law, want, 1e-11),
            "{computed} {law}"
        );

        // random h and t₀: Levi stays 1 and the c-law matches re-extraction
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let h = &random_field(&mut rng) + &ScalarField::constant(3, c64(3.0));
            let t0 = random_field(&mut rng);
            let t = random_field(&mut rng);
            let g = cr.gauge_transform(&t, &h, &t0);
            assert!((g.cr.levi_coefficient(&x).unwrap() - 1.0).abs() < 1e-9);
            let c1 = g.cr.c_field().eval_at(&x, 0).unwrap().value();
            let c2 = g.c.eval_at(&x, 0).unwrap().value();
            assert!(close(c1, c2, 1e-10), "{c1} vs {c2}");
            let same = cr.gauge_transform(&t, &h, &t);
            assert!(same.t.eval_at(&x, 0).unwrap().value().norm() < 1e-15);
        }
    }

    #[test]
    fn cr_function_data_solves_ee8_and_nbm() {
        // η = u + i|z|²/2 stays a CR function after the gauge change
        let g = gauged_heisenberg();
        let cr = &g.cr;
        let eta = field("u + i*(x^2 + y^2)/2");
        let zero = ScalarField::constant(3, c64(0.0));
        let x = [0.2, -0.3, 0.25];
        assert!(
            cr.cr_apply(&eta, CrOp::Delbar, &x, 0)
                .unwrap()
                .value()
                .norm()
                < 1e-12
        );
        let f = cr.d0(&eta);
        let m = f.conj().powi(3);
        assert!(cr.residual_ee8(&m, &zero, &x).unwrap().norm() < 1e-8);
        let nbm = cr.residual_maxwell_nbm(&f, &x).unwrap();
        assert!(nbm.norm() < 1e-8);
        let form = cr.maxwell_form_coefficient(&f, &x).unwrap();
        assert!(close(form, nbm.conj(), 1e-10));
        // a non-solution: the identity still ties the two paths together
        let bad = field("x - i*y");
        let nbm = cr.residual_maxwell_nbm(&bad, &x).unwrap();
        let form = cr.maxwell_form_coefficient(&bad, &x).unwrap();
        assert!(nbm.norm() > 0.1 && close(form, nbm.conj(), 1e-10));
    }

    #[test]
    fn type_iii_closed_forms() {
        let cr = heisenberg();
        let x = [0.1, 0.2, 0.3];
        let one = ScalarField::constant(3, c64(1.0));
        let t = cr.type_iii_invariants(&one, 0.4, 0.0, 0.0, &x).unwrap();
        assert_eq!([t.i, t.del_i_bar, t.r33, t.psi3], [c64(0.0); 4]);
        let fam = eps_family(0.5);
        let p = field("1.2 + 0.3*sin(u - x*y) + 0.1*y^2");
        let t = fam.type_iii_invariants(&p, 0.0, 0.0, 0.0, &x).unwrap();
        let c = fam.c_field();
        let dib = fam.del(&fam.i_field(&p).conj());
        let inner = &(&p * &p) * &dib;
        let core = &fam.del(&inner) + &(&c * &inner).scale(c64(2.0));
        let pv = p.eval_at(&x, 0).unwrap().value();
        let want = core.eval_at(&x, 0).unwrap().value() * 8.0 / pv.powi(4);
        assert!(close(t.r33, want, 1e-12 * want.norm().max(1.0)));
    }

    #[test]
    fn order_budget_is_checked() {
        let cr = heisenberg();
        let mut f = field("u*x");
        for _ in 0..7 {
            f = cr.del(&f);
        }
        assert!(matches!(
            f.eval_at(&[0.1, 0.2, 0.3], 0),
            Err(GeomError::OrderExhausted(_))
        ));
    }

    #[test]
    fn non_closed_mu_is_rejected() {
        let cr = CrStructure::from_exprs(&CHART, &["1", "-y", "x"], &["0", "1 + u", "i"])
            .unwrap()
            .assume_normalized();
        let zero = ScalarField::constant(3, c64(0.0));
        assert!(matches!(
            cr.residual_ee5(&zero, &[0.1, 0.2, 0.3]),
            Err(GeomError::NotNormalized(_))
        ));
    }
}
