//! Null coframes on `M × ℝ` built from CR data.
//!
//! The 4-chart is the CR chart followed by the fibre coordinate `r`. CR forms
//! and fields ignore `r`, so evaluating them on 4-variable seeds is the
//! pullback.

use crate::crstruct::CrStructure;
use crate::error::{GeomError, Result};
use crate::forms::{FormValue, ScalarField, Seeds};
use crate::jets::C64;
use crate::nullframe::NullCoframe;

fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Name of the fibre coordinate appended to the CR chart.
pub const FIBRE: &str = "r";

/// Lifts with `|cos((r+s)/2)|` below this are refused.
pub const COS_GUARD: f64 = 0.05;

/// Where the conformal factor `P` sits in the coframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftShape {
    /// `θ¹ = Pμ, θ³ = Pλ, θ⁴ = P(dr + Wμ + W̄μ̄ + Hλ)`, so `g = 2P²[μμ̄ + λ(dr + …)]`.
    Uniform,
    /// `θ¹ = Pμ, θ³ = λ, θ⁴ = dr + Wμ + W̄μ̄ + Hλ`, so `g = 2[P²μμ̄ + λ(dr + …)]`.
    Transverse,
}

/// The fibre coordinate as a field on the 4-chart.
pub fn fibre() -> ScalarField {
    ScalarField::new(4, |s| Ok(s.coords()[3].clone()))
}

/// Coframe of the lift ansatz with `P`, `W`, `H` given on the 4-chart.
pub fn lift_general(
    cr: &CrStructure,
    p: &ScalarField,
    w: &ScalarField,
    h: &ScalarField,
    shape: LiftShape,
) -> NullCoframe {
    let mut chart: Vec<&str> = cr.chart().iter().map(String::as_str).collect();
    chart.push(FIBRE);
    let (cr, p, w, h) = (cr.clone(), p.clone(), w.clone(), h.clone());
    NullCoframe::new(&chart, move |s| {
        if s.nvars() != 4 {
            return Err(GeomError::PointDimension {
                got: s.nvars(),
                expected: 4,
            });
        }
        let pv = p.eval(s)?;
        if pv.value().norm() < 1e-12 {
            return Err(GeomError::FieldVanishes { field: "P" });
        }
        let hv = h.eval(s)?;
        let hval = hv.value();
        if hval.im.abs() > 1e-10 * hval.norm().max(1.0) {
            return Err(GeomError::DomainGuard(format!(
                "H must be real, got {hval}"
            )));
        }
        let wv = w.eval(s)?;
        let lam = cr.lambda(s)?;
        let mu = cr.mu(s)?;
        let dr = FormValue::coordinate(4, 3, s.order());
        let t4 = &(&dr + &(&mu.scale(&wv) + &mu.conj().scale(&wv.conj()))) + &lam.scale(&hv);
        let t1 = mu.scale(&pv);
        Ok(match shape {
            LiftShape::Uniform => [t1, lam.scale(&pv), t4.scale(&pv)],
            LiftShape::Transverse => [t1, lam, t4],
        })
    })
}

/// Free data of the reduced lift; all fields live on the CR chart.
#[derive(Debug, Clone)]
pub struct LiftParameters {
    /// real, nonvanishing
    pub p: ScalarField,
    /// real
    pub s: ScalarField,
    pub t: ScalarField,
    pub m: ScalarField,
    pub lambda: f64,
}

impl LiftParameters {
    /// `p = 1, s = 0, t = 0` with the given `m` and `Λ`.
    pub fn trivial(m: ScalarField, lambda: f64) -> LiftParameters {
        LiftParameters {
            p: ScalarField::constant(3, c64(1.0)),
            s: ScalarField::constant(3, c64(0.0)),
            t: ScalarField::constant(3, c64(0.0)),
            m,
            lambda,
        }
    }
}

/// The functions entering the reduced lift. `x`, `y`, `q`, `h` live on the
/// CR chart; `p_cap`, `w`, `h_cap` also depend on `r`.
#[derive(Debug, Clone)]
pub struct ReducedFields {
    pub x: ScalarField,
    pub y: ScalarField,
    pub q: ScalarField,
    pub h: ScalarField,
    pub p_cap: ScalarField,
    pub w: ScalarField,
    pub h_cap: ScalarField,
}

/// Values of [`ReducedFields`] at one point of the 4-chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedValues {
    pub x: C64,
    pub y: C64,
    pub q: C64,
    pub h: C64,
    pub p_cap: C64,
    pub w: C64,
    pub h_cap: C64,
}

impl ReducedFields {
    pub fn at(&self, point: &[f64]) -> Result<ReducedValues> {
        let s = Seeds::new(point, 0)?;
        let v = |f: &ScalarField| f.eval(&s).map(|j| j.value());
        Ok(ReducedValues {
            x: v(&self.x)?,
            y: v(&self.y)?,
            q: v(&self.q)?,
            h: v(&self.h)?,
            p_cap: v(&self.p_cap)?,
            w: v(&self.w)?,
            h_cap: v(&self.h_cap)?,
        })
    }
}

fn e_i(phase: &ScalarField, k: f64) -> ScalarField {
    phase.map(move |j| Ok((j * C64::new(0.0, k)).exp()))
}

/// Assembles `x, y, Q, h, P, W, H` from the CR data and the free functions.
pub fn reduced_fields(cr: &CrStructure, params: &LiftParameters) -> ReducedFields {
    let LiftParameters { p, s, t, m, lambda } = params;
    let lambda = *lambda;
    let k = |v: f64| ScalarField::constant(3, c64(v));
    let ki = |v: f64| ScalarField::constant(3, C64::new(0.0, v));
    let c = cr.c_field();
    let cb = c.conj();
    let tb = t.conj();
    let mb = m.conj();
    let dlp = cr.log_derivative(crate::crstruct::CrOp::Del, p);
    let dblp = cr.log_derivative(crate::crstruct::CrOp::Delbar, p);
    let d0lp = cr.log_derivative(crate::crstruct::CrOp::D0, p);
    let dp = cr.del(p);
    let dbp = cr.delbar(p);
    let p4 = p.powi(-4);
    let p2 = p * p;

    // e^{is}x = c + 2∂log p − t
    let x = &e_i(s, -1.0) * &(&(&c + &(&dlp * &k(2.0))) - t);
    // y = ic + 2i∂log p + ∂s − 2it
    let y = &(&(&(&c * &ki(1.0)) + &(&dlp * &ki(2.0))) + &cr.del(s)) - &(t * &ki(2.0));

    // 2∂p∂̄p − p(∂∂̄p + ∂̄∂p), divided by p² below
    let grad = &(&(&dp * &dbp) * &k(2.0)) - &(p * &(&cr.del(&dbp) + &cr.delbar(&dp)));
    let grad = &grad * &p2.recip();

    // the t-term pairs with ∂̄log p, not ∂̄p: with ∂̄p the scalar curvature
    // is not constant once both t and p vary
    let q = {
        let a = &(&(&(&(m * &k(3.0)) + &mb) * &p4) + &(&p2 * &k(2.0 * lambda / 3.0)))
            + &(&grad * &k(0.5));
        let b = &(&(&d0lp * &ki(0.5)) + &(&(t * &dblp) * &k(2.0))) + &(&tb * &dlp);
        let e = &(&(&cr.delbar(t) * &k(1.5)) - &(&cb * t)) - &(&(&c * &tb) * &k(0.5));
        let f = &(&(&(t * &tb) * &k(2.5)) + &cr.del(&tb)) - &cr.delbar(&c);
        &(&(&a - &b) + &e) + &f
    };

    let h = {
        let a = &(&(&(m + &mb) * &p4) * &k(3.0)) + &(&p2 * &k(2.0 * lambda));
        let b = &grad - &(&(&(t * &dblp) + &(&tb * &dlp)) * &k(3.0));
        let e = &(&(&cr.del(&tb) + &cr.delbar(t)) * &k(2.5)) + &(&(t * &tb) * &k(6.0));
        let f = &(&(&(&c * &tb) + &(&cb * t)) * &k(1.5)) + &(&cr.delbar(&c) * &k(2.0));
        &(&(&a + &b) + &e) - &(&f - &cr.d0(s))
    };

    let r = fibre();
    let phase = &r + s;
    let half = phase.map(|j| Ok(j.scale(c64(0.5)).cos()));
    let p_cap = {
        let p = p.clone();
        half.zip(&p, |cs, p| {
            if cs.value().norm() < COS_GUARD {
                return Err(GeomError::DomainGuard(format!(
                    "|cos((r+s)/2)| = {:.3e} below {COS_GUARD}",
                    cs.value().norm()
                )));
            }
            p.try_div(&cs)
        })
    };
    let w = &(&e_i(&r, -1.0) * &(&x * &ki(1.0))) + &y;
    let h_cap = {
        let e1 = e_i(&phase, 1.0);
        let e2 = e_i(&phase, 2.0);
        let top = &(m * &p4) * &e2;
        let mid = &q * &e1;
        &(&(&top + &top.conj()) + &(&mid + &mid.conj())) + &h
    };
    ReducedFields {
        x,
        y,
        q,
        h,
        p_cap,
        w,
        h_cap,
    }
}

/// The reduced lift: `P = p/cos((r+s)/2)`, `W = ie^{−ir}x + y`, and `H` with its
/// explicit `r` dependence. Requires a normalized structure with `μ` closed.
pub fn lift_reduced(cr: &CrStructure, params: &LiftParameters) -> Result<NullCoframe> {
    if !cr.is_normalized() {
        return Err(GeomError::NotNormalized(
            "reduced lift needs a normalized structure".into(),
        ));
    }
    let f = reduced_fields(cr, params);
    Ok(lift_general(
        cr,
        &f.p_cap,
        &f.w,
        &f.h_cap,
        LiftShape::Uniform,
    ))
}

/// `Ψ₂ = (1 + e^{i(r+s)})³ m / (2p⁶)` for the reduced lift with `t = 0`.
pub fn psi2_closed(m: C64, p: f64, r: f64, s: f64) -> C64 {
    (C64::new(1.0, 0.0) + C64::from_polar(1.0, r + s)).powi(3) * m / (2.0 * p.powi(6))
}

/// Fefferman fields `W = −(i/3)c`, `H = −(1/12)(∂c̄ + ∂̄c)`.
pub fn fefferman_fields(cr: &CrStructure) -> (ScalarField, ScalarField) {
    let c = cr.c_field();
    let w = c.scale(C64::new(0.0, -1.0 / 3.0));
    let h = (&cr.del(&c.conj()) + &cr.delbar(&c)).scale(c64(-1.0 / 12.0));
    let lift4 = |f: ScalarField| ScalarField::new(4, move |s| f.eval(s));
    (lift4(w), lift4(h))
}

/// The Fefferman coframe: `P = 1` with the fields of [`fefferman_fields`].
pub fn lift_fefferman(cr: &CrStructure) -> Result<NullCoframe> {
    if !cr.is_normalized() {
        return Err(GeomError::NotNormalized(
            "Fefferman lift needs a normalized structure".into(),
        ));
    }
    let (w, h) = fefferman_fields(cr);
    let one = ScalarField::constant(4, c64(1.0));
    Ok(lift_general(cr, &one, &w, &h, LiftShape::Uniform))
}

/// Largest difference of the coframe coefficients between two points.
pub fn coframe_distance(cf: &NullCoframe, a: &[f64], b: &[f64]) -> Result<f64> {
    let fa = cf.forms(&Seeds::new(a, 0)?)?;
    let fb = cf.forms(&Seeds::new(b, 0)?)?;
    let mut worst: f64 = 0.0;
    for (x, y) in fa.iter().zip(&fb) {
        for (u, v) in x.values().iter().zip(y.values()) {
            worst = worst.max((u - v).norm());
        }
    }
    Ok(worst)
}

/// Largest change of `P²`, `W`, `H` and the metric under `r → r + 2π`,
/// relative to `max(1, largest compared magnitude)`. `P` itself flips sign
/// over one period, so it is compared squared.
pub fn periodicity_residual(
    fields: &ReducedFields,
    cf: &NullCoframe,
    point: &[f64],
) -> Result<f64> {
    let mut shifted = point.to_vec();
    shifted[3] += 2.0 * std::f64::consts::PI;
    let a = fields.at(point)?;
    let b = fields.at(&shifted)?;
    let ga = cf.metric(point)?;
    let gb = cf.metric(&shifted)?;
    let mut pairs = vec![
        (a.p_cap * a.p_cap, b.p_cap * b.p_cap),
        (a.w, b.w),
        (a.h_cap, b.h_cap),
    ];
    pairs.extend(
        ga.iter()
            .flatten()
            .copied()
            .zip(gb.iter().flatten().copied()),
    );
    let (mut diff, mut scale) = (0f64, 1f64);
    for (x, y) in pairs {
        diff = diff.max((x - y).norm());
        scale = scale.max(x.norm()).max(y.norm());
    }
    Ok(diff / scale)
}

/// Largest `|∂_r|` of the coframe coefficients at a point.
pub fn fibre_dependence(cf: &NullCoframe, point: &[f64]) -> Result<f64> {
    let forms = cf.forms(&Seeds::new(point, 1)?)?;
    let mut worst: f64 = 0.0;
    for f in &forms {
        for comp in f.components() {
            worst = worst.max(comp.partial(3)?.value().norm());
        }
    }
    Ok(worst)
}
