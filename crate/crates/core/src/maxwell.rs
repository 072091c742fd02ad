//! Null Maxwell fields `ℱ = f λ∧μ` aligned with the lifted congruence.
//!
//! The Hodge star uses the frame metric and the volume form
//! `i θ¹∧θ²∧θ³∧θ⁴`, the orientation for which `*(θ³∧θ¹) = −i θ³∧θ¹`.

use std::array;

use crate::crstruct::CrStructure;
use crate::error::Result;
use crate::forms::{FormValue, ScalarField, Seeds};
use crate::jets::{Jet, C64};
use crate::nullframe::{partner, Arr44, FrameAt, NullCoframe};

const I: C64 = C64::new(0.0, 1.0);

fn perm_sign(p: [usize; 4]) -> f64 {
    let mut s = 1.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            if p[a] == p[b] {
                return 0.0;
            }
            if p[a] > p[b] {
                s = -s;
            }
        }
    }
    s
}

/// Frame components of `*F` from frame components of `F`:
/// `(*F)_ij = ½ ε_ijkl F^kl` with `ε_0123 = i`.
pub fn star_components(f: &Arr44<Jet>) -> Arr44<Jet> {
    let n = f[0][0].nvars();
    let order = f[0][0].order();
    array::from_fn(|i| {
        array::from_fn(|j| {
            let mut acc = Jet::zero(n, order);
            for k in 0..4 {
                for l in 0..4 {
                    let e = perm_sign([i, j, k, l]);
                    if e != 0.0 {
                        // F^kl = F_{partner(k) partner(l)}
                        acc += &f[partner(k)][partner(l)].scale(I * (0.5 * e));
                    }
                }
            }
            acc
        })
    })
}

/// `Σ_{i<j} F_ij θ^i∧θ^j`
fn recompose(frame: &FrameAt, f: &Arr44<Jet>) -> Result<FormValue> {
    let order = frame.order().min(f[0][0].order());
    let mut out = FormValue::zero(frame.dim(), 2, order);
    for i in 0..4 {
        for j in (i + 1)..4 {
            let tt = frame.theta[i]
                .truncate(order)
                .wedge(&frame.theta[j].truncate(order))?;
            out = &out + &tt.scale(&f[i][j]);
        }
    }
    Ok(out)
}

/// Hodge star of a 2-form at the frame's point.
pub fn hodge_star(frame: &FrameAt, w: &FormValue) -> Result<FormValue> {
    let comps = frame.decompose2(w);
    recompose(frame, &star_components(&comps))
}

/// Residuals of `ℱ = f λ∧μ` at a point of the 4-chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellReport {
    /// `max |dℱ|` over coordinate components
    pub df_residual: f64,
    /// `max |ℱ∧ℱ|`
    pub nullness: f64,
    /// `max |*ℱ + iℱ|`
    pub asd_residual: f64,
    /// `∂f̄' + cf̄'` on the normalized structure, `f' = ωf`
    pub nbm_residual: C64,
    /// Coefficient of `λ'∧μ∧μ̄` in `dℱ`; the conjugate of `nbm_residual` when `μ` is closed.
    pub df_coefficient: C64,
}

impl MaxwellReport {
    /// `|df_coefficient − conj(nbm_residual)|`
    pub fn equivalence_residual(&self) -> f64 {
        (self.df_coefficient - self.nbm_residual.conj()).norm()
    }
}

/// `ℱ = f λ∧μ` with the structure's own `λ`, checked against a lifted coframe.
pub fn maxwell_check(
    cr: &CrStructure,
    coframe: &NullCoframe,
    f: &ScalarField,
    point: &[f64],
) -> Result<MaxwellReport> {
    let seeds = Seeds::new(point, 1)?;
    let lam = cr.lambda(&seeds)?;
    let mu = cr.mu(&seeds)?;
    let fv = f.eval(&seeds)?;
    let big_f = lam.wedge(&mu)?.scale(&fv);
    let df = big_f.d()?;
    let f0 = big_f.truncate(0);
    let frame = coframe.at(point, 0)?;
    let star = hodge_star(&frame, &f0)?;
    let asd = &star + &f0.scale_c(I);

    let normalized = cr.normalize();
    let omega = if cr.is_normalized() {
        ScalarField::constant(3, C64::new(1.0, 0.0))
    } else {
        cr.levi_field()
    };
    let f_prime = &omega * f;
    let nbm = normalized
        .nbm_field(&f_prime)
        .eval_at(&point[..3], 0)?
        .value();
    let s0 = Seeds::new(point, 0)?;
    let lam_n = normalized.lambda(&s0)?;
    let mu0 = normalized.mu(&s0)?;
    let basis = lam_n.wedge(&mu0)?.wedge(&mu0.conj())?;
    let df_coefficient = df.ratio(&basis)?.value();

    Ok(MaxwellReport {
        df_residual: df.max_abs(),
        nullness: f0.wedge(&f0)?.max_abs(),
        asd_residual: asd.max_abs(),
        nbm_residual: nbm,
        df_coefficient,
    })
}

/// Frame 2-form basis `θ^i∧θ^j`, `i < j`, with its index pair.
pub fn frame_two_forms(frame: &FrameAt) -> Result<Vec<((usize, usize), FormValue)>> {
    let mut out = Vec::with_capacity(6);
    for i in 0..4 {
        for j in (i + 1)..4 {
            out.push(((i, j), frame.theta[i].wedge(&frame.theta[j])?));
        }
    }
    Ok(out)
}
