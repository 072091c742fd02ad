//! Null coframes, rigid-frame structure coefficients, the Levi-Civita
//! connection and optical scalars of the null congruence metric-dual to `θ³`.
//!
//! Indices are 0-based in code: `θ[0..4]` stands for `(θ¹, θ², θ³, θ⁴)`.
//! The frame metric is `g01 = g23 = 1`, so raising or lowering an index is
//! the partner swap `0↔1`, `2↔3`.

use std::array;
use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::exprlang::parse;
use crate::forms::{basis_masks, indices, FormField, FormValue, ScalarField, Seeds};
use crate::jets::{Jet, C64};
use crate::linalg::{invert, COND_LIMIT};

/// Index partner under the frame metric.
pub const fn partner(i: usize) -> usize {
    i ^ 1
}

/// Frame metric `g_ij`.
pub fn frame_metric(i: usize, j: usize) -> f64 {
    if j == partner(i) {
        1.0
    } else {
        0.0
    }
}

pub type Arr4<T> = [T; 4];
pub type Arr44<T> = [[T; 4]; 4];
pub type Arr444<T> = [[[T; 4]; 4]; 4];

type CoframeFn = dyn Fn(&Seeds) -> Result<[FormValue; 3]> + Send + Sync;

/// Four 1-form fields `(θ¹, θ², θ³, θ⁴)` with `θ² = conj θ¹` and `θ³`, `θ⁴` real,
/// so that `g = 2(θ¹θ² + θ³θ⁴)`.
#[derive(Clone)]
pub struct NullCoframe {
    chart: Arc<[String]>,
    // yields θ¹, θ³, θ⁴
    forms: Arc<CoframeFn>,
}

impl fmt::Debug for NullCoframe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NullCoframe({:?})", self.chart)
    }
}

impl NullCoframe {
    /// Builds a coframe from a closure returning `θ¹`, `θ³`, `θ⁴` on the 4-chart.
    pub fn new(
        chart: &[&str],
        forms: impl Fn(&Seeds) -> Result<[FormValue; 3]> + Send + Sync + 'static,
    ) -> NullCoframe {
        NullCoframe {
            chart: chart.iter().map(|s| s.to_string()).collect(),
            forms: Arc::new(forms),
        }
    }

    pub fn from_fields(chart: &[&str], t1: FormField, t3: FormField, t4: FormField) -> NullCoframe {
        NullCoframe::new(chart, move |s| Ok([t1.eval(s)?, t3.eval(s)?, t4.eval(s)?]))
    }

    /// Coframe from coefficient expressions, one per chart coordinate and form.
    pub fn from_exprs(
        chart: &[&str],
        t1: &[&str],
        t3: &[&str],
        t4: &[&str],
    ) -> Result<NullCoframe> {
        let field = |src: &[&str]| -> Result<FormField> {
            let exprs = src
                .iter()
                .map(|e| parse(e, chart))
                .collect::<Result<Vec<_>>>()?;
            FormField::one_form_from_exprs(exprs)
        };
        Ok(NullCoframe::from_fields(
            chart,
            field(t1)?,
            field(t3)?,
            field(t4)?,
        ))
    }

    pub fn chart(&self) -> &[String] {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.len()
    }

    /// `θ¹, θ², θ³, θ⁴` as coordinate forms.
    pub fn forms(&self, seeds: &Seeds) -> Result<[FormValue; 4]> {
        let [t1, t3, t4] = (self.forms)(seeds)?;
        let t2 = t1.conj();
        Ok([t1, t2, t3, t4])
    }

    /// Evaluates the coframe, its inverse frame and the frame condition number.
    pub fn at(&self, point: &[f64], order: usize) -> Result<FrameAt> {
        if point.len() != self.dim() {
            return Err(GeomError::PointDimension {
                got: point.len(),
                expected: self.dim(),
            });
        }
        FrameAt::from_forms(self.forms(&Seeds::new(point, order)?)?)
    }

    /// Coordinate metric `g_μν = Σ g_ij θ^i_μ θ^j_ν` at a point.
    pub fn metric(&self, point: &[f64]) -> Result<Vec<Vec<C64>>> {
        let th = self.forms(&Seeds::new(point, 0)?)?;
        let n = self.dim();
        let v: Vec<Vec<C64>> = th.iter().map(FormValue::values).collect();
        Ok((0..n)
            .map(|mu| {
                (0..n)
                    .map(|nu| {
                        v[0][mu] * v[1][nu]
                            + v[1][mu] * v[0][nu]
                            + v[2][mu] * v[3][nu]
                            + v[3][mu] * v[2][nu]
                    })
                    .collect()
            })
            .collect())
    }

    /// Largest violation of `θ² = conj θ¹`, `θ³`, `θ⁴` real at a point.
    pub fn reality_residual(&self, point: &[f64]) -> Result<f64> {
        let th = self.forms(&Seeds::new(point, 0)?)?;
        Ok(th[2]
            .values()
            .iter()
            .chain(th[3].values().iter())
            .map(|c| c.im.abs())
            .fold(0.0, f64::max))
    }
}

/// A coframe evaluated at a point together with its dual frame.
#[derive(Debug, Clone)]
pub struct FrameAt {
    pub theta: [FormValue; 4],
    /// `frame[j][μ] = e_j^μ`, dual to `theta`.
    pub frame: Vec<Vec<Jet>>,
    /// ∞-norm condition number of the coframe matrix.
    pub cond: f64,
}

impl FrameAt {
    pub fn from_forms(theta: [FormValue; 4]) -> Result<FrameAt> {
        let a: Vec<Vec<Jet>> = theta.iter().map(|t| t.components().to_vec()).collect();
        let (inv, cond) = invert(&a)?;
        if cond > COND_LIMIT {
            return Err(GeomError::SingularFrame { cond });
        }
        let n = a.len();
        // inv[μ][j] = e_j^μ
        let frame = (0..n)
            .map(|j| (0..n).map(|mu| inv[mu][j].clone()).collect())
            .collect();
        Ok(FrameAt { theta, frame, cond })
    }

    pub fn order(&self) -> usize {
        self.theta[0].order()
    }

    pub fn dim(&self) -> usize {
        self.theta[0].dim()
    }

    /// Frame components `ω(e_i)` of a 1-form.
    pub fn decompose(&self, w: &FormValue) -> Arr4<Jet> {
        array::from_fn(|i| {
            let mut s = Jet::zero(self.dim(), w.order().min(self.order()));
            for (mu, c) in w.components().iter().enumerate() {
                s += c * &self.frame[i][mu];
            }
            s
        })
    }

    /// Frame components `F(e_j, e_k)` of a 2-form.
    pub fn decompose2(&self, f: &FormValue) -> Arr44<Jet> {
        let order = f.order().min(self.order());
        let n = self.dim();
        let mut out: Arr44<Jet> = array::from_fn(|_| array::from_fn(|_| Jet::zero(n, order)));
        let masks = basis_masks(n, 2);
        for j in 0..4 {
            for k in (j + 1)..4 {
                let mut s = Jet::zero(n, order);
                for (c, &m) in f.components().iter().zip(masks) {
                    let ix = indices(m);
                    let (mu, nu) = (ix[0], ix[1]);
                    let ej = &self.frame[j];
                    let ek = &self.frame[k];
                    s += c * &(&ej[mu] * &ek[nu] - &ej[nu] * &ek[mu]);
                }
                out[k][j] = -&s;
                out[j][k] = s;
            }
        }
        out
    }

    /// Coordinate 1-form `Σ_i a_i θ^i`.
    pub fn compose(&self, a: &Arr4<Jet>) -> FormValue {
        let order = a
            .iter()
            .map(Jet::order)
            .min()
            .unwrap_or(0)
            .min(self.order());
        let mut out = FormValue::zero(self.dim(), 1, order);
        for (ai, th) in a.iter().zip(&self.theta) {
            out = &out + &th.scale(ai);
        }
        out
    }
}

/// Frame components of a 1-form at the base point.
pub fn frame_decompose(w: &FormValue, frame: &FrameAt) -> Arr4<C64> {
    let d = frame.decompose(w);
    array::from_fn(|i| d[i].value())
}

/// `D^i_jk = dθ^i(e_j, e_k)`, so `dθ^i = ½ D^i_jk θ^j∧θ^k`; the structure
/// coefficients in `dθ^i = −½ c^i_jk θ^j∧θ^k` are `c = −D`.
#[derive(Debug, Clone)]
pub struct StructureCoefficients {
    pub d: Arr444<Jet>,
    /// Largest component of `dθ^i − ½ D^i_jk θ^j∧θ^k` at the base point.
    pub residual: f64,
}

impl StructureCoefficients {
    pub fn c(&self, i: usize, j: usize, k: usize) -> C64 {
        -self.d[i][j][k].value()
    }
}

pub fn structure_coefficients(frame: &FrameAt) -> Result<StructureCoefficients> {
    let mut d: Vec<Arr44<Jet>> = Vec::with_capacity(4);
    let mut residual: f64 = 0.0;
    for i in 0..4 {
        let dth = frame.theta[i].d()?;
        let di = frame.decompose2(&dth);
        let mut rebuilt = FormValue::zero(frame.dim(), 2, dth.order());
        for j in 0..4 {
            for k in (j + 1)..4 {
                let w = frame.theta[j].wedge(&frame.theta[k])?;
                rebuilt = &rebuilt + &w.scale(&di[j][k]);
            }
        }
        residual = residual.max((&dth - &rebuilt).max_abs());
        d.push(di);
    }
    let d: Arr444<Jet> = array::from_fn(|i| d[i].clone());
    Ok(StructureCoefficients { d, residual })
}

/// Connection 1-forms of the Levi-Civita connection in the rigid frame.
#[derive(Debug, Clone)]
pub struct ConnectionForms {
    /// `gamma[i][j][k] = Γ_ij(e_k)` with the first index lowered.
    pub gamma: Arr444<Jet>,
    /// `mixed[i][j] = Γ^i_j` as coordinate 1-forms.
    pub mixed: Arr44<FormValue>,
    /// Largest component of `dθ^i + Γ^i_j∧θ^j`.
    pub residual: f64,
}

impl ConnectionForms {
    /// Lowered form `Γ_ij` as a coordinate 1-form.
    pub fn lowered(&self, i: usize, j: usize) -> &FormValue {
        &self.mixed[partner(i)][j]
    }

    pub fn component(&self, i: usize, j: usize, k: usize) -> C64 {
        self.gamma[i][j][k].value()
    }
}

/// Solves `dθ^i + Γ^i_j∧θ^j = 0`, `Γ_ij = −Γ_ji`.
pub fn connection(frame: &FrameAt, sc: &StructureCoefficients) -> Result<ConnectionForms> {
    // lowered D_ijk = D^{partner(i)}_jk
    let low = |i: usize, j: usize, k: usize| &sc.d[partner(i)][j][k];
    let gamma: Arr444<Jet> = array::from_fn(|i| {
        array::from_fn(|j| array::from_fn(|k| (low(i, j, k) + low(j, k, i) - low(k, i, j)) * 0.5))
    });
    let mixed: Arr44<FormValue> =
        array::from_fn(|i| array::from_fn(|j| frame.compose(&gamma[partner(i)][j])));
    let mut residual: f64 = 0.0;
    for i in 0..4 {
        let mut r = frame.theta[i].d()?;
        for j in 0..4 {
            r = &r + &mixed[i][j].wedge(&frame.theta[j])?;
        }
        residual = residual.max(r.max_abs());
    }
    Ok(ConnectionForms {
        gamma,
        mixed,
        residual,
    })
}

/// Optical scalars of the congruence whose coframe is adapted through `θ³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalScalars {
    pub kappa: C64,
    pub sigma: C64,
    pub rho: C64,
    pub tau: C64,
    /// Twist `Ω = 2 Im ρ`.
    pub omega: f64,
    /// Expansion `Θ = −2 Re ρ`.
    pub theta_exp: f64,
    /// Twist read from `dθ³∧θ³`, corrected by the κ terms.
    pub omega_from_forms: f64,
    /// Non-proportionality residual of that extraction.
    pub omega_residual: f64,
}

impl OpticalScalars {
    pub fn shearfree_geodesic(&self, tol: f64) -> bool {
        self.kappa.norm() < tol && self.sigma.norm() < tol
    }

    pub fn twisting(&self, tol: f64) -> bool {
        self.omega.abs() > tol
    }

    pub fn diverging(&self, tol: f64) -> bool {
        self.rho.norm() > tol
    }
}

pub fn optical_scalars(frame: &FrameAt, conn: &ConnectionForms) -> Result<OpticalScalars> {
    let th = &frame.theta;
    let order = frame.order() - 1;
    let th: Vec<FormValue> = th.iter().map(|t| t.truncate(order)).collect();
    let vol = th[0].wedge(&th[1])?.wedge(&th[2])?.wedge(&th[3])?;
    let d1 = frame.theta[0].d()?;
    let d3 = frame.theta[2].d()?;
    let kb = d3.wedge(&th[0])?.wedge(&th[2])?.ratio(&vol)?.value();
    let sb = d1.wedge(&th[0])?.wedge(&th[2])?.ratio(&vol)?.value();
    let (kappa, sigma) = (-kb.conj(), -sb.conj());

    let k = Jet::constant(frame.dim(), order, kappa);
    let twist_form = &d3.wedge(&th[2])?
        + &(&th[0].scale(&k) + &th[1].scale(&k.conj()))
            .wedge(&th[2])?
            .wedge(&th[3])?;
    let basis = th[0].wedge(&th[1])?.wedge(&th[2])?;
    let q = crate::forms::extract_coefficient(&twist_form, &basis)?;

    let rho = -conn.component(1, 3, 0).conj();
    let tau = -conn.component(1, 3, 2).conj();
    Ok(OpticalScalars {
        kappa,
        sigma,
        rho,
        tau,
        omega: 2.0 * rho.im,
        theta_exp: -2.0 * rho.re,
        omega_from_forms: q.value.im,
        omega_residual: q.residual.max(q.value.re.abs()),
    })
}

/// Adapted change of coframe preserving the direction of `θ³`:
/// `θ¹' = e^{iφ}(θ¹ + B̄θ³)`, `θ³' = Aθ³`, `θ⁴' = A⁻¹(θ⁴ − Bθ¹ − B̄θ² − BB̄θ³)`.
pub fn adapted_transform(
    coframe: &NullCoframe,
    a: ScalarField,
    phi: ScalarField,
    b: ScalarField,
) -> NullCoframe {
    let base = coframe.clone();
    let chart: Vec<&str> = coframe.chart.iter().map(String::as_str).collect();
    NullCoframe::new(&chart, move |s| {
        let [t1, t2, t3, t4] = base.forms(s)?;
        let av = a.eval(s)?;
        if av.value().norm() == 0.0 {
            return Err(GeomError::FieldVanishes { field: "A" });
        }
        let rot = (phi.eval(s)? * C64::new(0.0, 1.0)).exp();
        let bv = b.eval(s)?;
        let bb = bv.conj();
        let n1 = (&t1 + &t3.scale(&bb)).scale(&rot);
        let n3 = t3.scale(&av);
        let rest = &(&(&t4 - &t1.scale(&bv)) - &t2.scale(&bb)) - &t3.scale(&(&bv * &bb));
        let n4 = rest.scale(&av.recip()?);
        Ok([n1, n3, n4])
    })
}
