//! Named residual checks evaluated pointwise on a scenario.
//!
//! Every check returns an absolute residual, a residual relative to a
//! check-specific scale, and a pass flag against the tolerance it is run with.

use std::cell::OnceCell;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::Scenario;
use crate::crstruct::CrStructure;
use crate::curvature::{analyze, curvature_scale, identity_residuals, PointGeometry};
use crate::error::{GeomError, Result};
use crate::exprlang::parse;
use crate::forms::ScalarField;
use crate::jets::C64;
use crate::lift::periodicity_residual;
use crate::maxwell::maxwell_check;
use crate::nullframe::{frame_metric, OpticalScalars};
use crate::petrov::{classify, PetrovLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckKind {
    RicciBlocks,
    WeylScalars,
    GoldbergSachs,
    Classify,
    Shearfree,
    Levi,
    StructureEquations,
    CurvatureIdentities,
    CrCommutator,
    CrStructureFunction,
    CrSecondForm,
    CrMaxwellEquivalence,
    Maxwell,
    CartanCovanishing,
    Periodicity,
}

impl CheckKind {
    pub const ALL: [CheckKind; 15] = [
        CheckKind::RicciBlocks,
        CheckKind::WeylScalars,
        CheckKind::GoldbergSachs,
        CheckKind::Classify,
        CheckKind::Shearfree,
        CheckKind::Levi,
        CheckKind::StructureEquations,
        CheckKind::CurvatureIdentities,
        CheckKind::CrCommutator,
        CheckKind::CrStructureFunction,
        CheckKind::CrSecondForm,
        CheckKind::CrMaxwellEquivalence,
        CheckKind::Maxwell,
        CheckKind::CartanCovanishing,
        CheckKind::Periodicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::RicciBlocks => "ricci_blocks",
            CheckKind::WeylScalars => "weyl_scalars",
            CheckKind::GoldbergSachs => "goldberg_sachs",
            CheckKind::Classify => "classify",
            CheckKind::Shearfree => "shearfree",
            CheckKind::Levi => "levi",
            CheckKind::StructureEquations => "structure_equations",
            CheckKind::CurvatureIdentities => "curvature_identities",
            CheckKind::CrCommutator => "cr_commutator",
            CheckKind::CrStructureFunction => "cr_structure_function",
            CheckKind::CrSecondForm => "cr_second_form",
            CheckKind::CrMaxwellEquivalence => "cr_maxwell_equivalence",
            CheckKind::Maxwell => "maxwell",
            CheckKind::CartanCovanishing => "cartan_covanishing",
            CheckKind::Periodicity => "periodicity",
        }
    }

    pub fn parse(s: &str) -> Option<CheckKind> {
        CheckKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn default_tol(self) -> f64 {
        match self {
            CheckKind::RicciBlocks => 1e-6,
            CheckKind::WeylScalars => 1e-8,
            CheckKind::GoldbergSachs => 1e-7,
            CheckKind::Classify => crate::petrov::DEFAULT_TOL,
            CheckKind::Shearfree => 1e-9,
            CheckKind::Levi => 1e-10,
            CheckKind::StructureEquations => 1e-10,
            CheckKind::CurvatureIdentities => 1e-9,
            CheckKind::CrCommutator => 1e-8,
            CheckKind::CrStructureFunction => 1e-9,
            CheckKind::CrSecondForm => 1e-10,
            CheckKind::CrMaxwellEquivalence => 1e-9,
            CheckKind::Maxwell => 1e-10,
            CheckKind::CartanCovanishing => 1e-7,
            CheckKind::Periodicity => 1e-12,
        }
    }

    /// What the residual measures, for reports and docs.
    pub fn describe(self) -> &'static str {
        match self {
            CheckKind::RicciBlocks => "max |R_ij − Λg_ij|, relative to the curvature scale",
            CheckKind::WeylScalars => "max |Ψn − expected|, relative to max(1, |expected|)",
            CheckKind::GoldbergSachs => "max(|Ψ0|, |Ψ1|), relative to the curvature scale",
            CheckKind::Classify => "1 when the Petrov label differs from the expected one; tol is the classification tolerance",
            CheckKind::Shearfree => "max(|κ|, |σ|)",
            CheckKind::Levi => "|ω − expected|",
            CheckKind::StructureEquations => "first structure equation and d² = 0 on the coframe",
            CheckKind::CurvatureIdentities => "Riemann symmetries, first Bianchi, Weyl trace, relative to the curvature scale",
            CheckKind::CrCommutator => "commutator identity on random fields and the dual-frame residual",
            CheckKind::CrStructureFunction => "∂c̄ − ∂̄c, reality of c and the Levi normalization",
            CheckKind::CrSecondForm => "second CR form residual against i·conj of the ∂t equation, random t",
            CheckKind::CrMaxwellEquivalence => "dℱ coefficient against conj of ∂f̄ + cf̄, random f",
            CheckKind::Maxwell => "dℱ, ℱ∧ℱ, *ℱ + iℱ for the solution; the non-solution must exceed 0.1",
            CheckKind::CartanCovanishing => "1 when exactly one of |Ψ4|, |Cartan invariant| is below tol",
            CheckKind::Periodicity => "change of P², W, H and the metric under r → r + 2π",
        }
    }

    pub fn needs_coframe(self) -> bool {
        !matches!(
            self,
            CheckKind::Levi
                | CheckKind::CrCommutator
                | CheckKind::CrStructureFunction
                | CheckKind::CrSecondForm
                | CheckKind::CrMaxwellEquivalence
        )
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one check at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub abs: f64,
    pub rel: f64,
    pub pass: bool,
    pub label: Option<PetrovLabel>,
}

impl Sample {
    fn within(abs: f64, rel: f64, tol: f64) -> Sample {
        Sample {
            abs,
            rel,
            pass: rel <= tol,
            label: None,
        }
    }
}

/// Levi coefficients below this are treated as degenerate by the CR checks.
pub const LEVI_FLOOR: f64 = 1e-6;

/// Number of random fields used by the CR checks.
pub const RANDOM_FIELDS: usize = 10;

/// Per-scenario state shared by all points: the normalized structure and the
/// random test fields.
#[derive(Clone)]
pub struct CheckContext {
    normalized: Option<CrStructure>,
    fields: Vec<ScalarField>,
}

/// Random smooth complex field on a 3-chart, drawn from `rng`.
pub fn random_field(rng: &mut ChaCha8Rng, chart: &[&str]) -> Result<ScalarField> {
    let mut k = || rng.gen_range(-1.0..1.0);
    let [u, x, y] = [chart[0], chart[1], chart[2]];
    let src = format!(
        "({:.6} + i*{:.6})*sin({:.6}*{u} + {:.6}*{x} + {:.6}*{y}) + {:.6}*{x}*{y}*{u} + exp({:.6}*{x} - i*{:.6}*{u}) + ({:.6} + i*{:.6})*{y}^2",
        k(), k(), k(), k(), k(), k(), k(), k(), k(), k()
    );
    Ok(ScalarField::from_expr(parse(&src, chart)?))
}

impl CheckContext {
    /// Random fields come from `ChaCha8Rng::seed_from_u64(seed)`.
    pub fn new(scenario: &Scenario, seed: u64) -> Result<CheckContext> {
        let Some(cr) = &scenario.cr else {
            return Ok(CheckContext {
                normalized: None,
                fields: Vec::new(),
            });
        };
        let chart: Vec<&str> = cr.chart().iter().map(String::as_str).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields = (0..RANDOM_FIELDS)
            .map(|_| random_field(&mut rng, &chart))
            .collect::<Result<Vec<_>>>()?;
        Ok(CheckContext {
            normalized: Some(cr.normalize()),
            fields,
        })
    }
}

fn missing(what: &str, check: CheckKind) -> GeomError {
    GeomError::InvalidParameter(format!("check `{check}` needs {what}"))
}

/// Rejects checks the scenario has no data for, before any evaluation.
pub fn applicable(scenario: &Scenario, check: CheckKind) -> Result<()> {
    if check.needs_coframe() && scenario.coframe.is_none() {
        return Err(missing("a coframe", check));
    }
    let r = &scenario.reference;
    match check {
        CheckKind::WeylScalars if r.psi.is_none() => Err(missing("reference Weyl scalars", check)),
        CheckKind::Levi if r.levi.is_none() => Err(missing("a reference Levi coefficient", check)),
        CheckKind::Maxwell if r.maxwell.is_none() || scenario.cr.is_none() => {
            Err(missing("a Maxwell candidate pair", check))
        }
        CheckKind::Periodicity if scenario.reduced.is_none() => {
            Err(missing("a reduced lift", check))
        }
        CheckKind::Levi
        | CheckKind::CrCommutator
        | CheckKind::CrStructureFunction
        | CheckKind::CrSecondForm
        | CheckKind::CrMaxwellEquivalence
        | CheckKind::CartanCovanishing
            if scenario.cr.is_none() =>
        {
            Err(missing("CR data", check))
        }
        _ => Ok(()),
    }
}

/// Evaluates several checks at one point, sharing the curvature computation.
/// A point outside the scenario's domain yields a `DomainGuard` error for
/// every check.
pub fn evaluate_point(
    scenario: &Scenario,
    ctx: &CheckContext,
    checks: &[(CheckKind, f64)],
    point: &[f64],
) -> Vec<Result<Sample>> {
    if let Err(reason) = scenario.domain.check(point) {
        return checks
            .iter()
            .map(|_| Err(GeomError::DomainGuard(reason.clone())))
            .collect();
    }
    let geometry: OnceCell<Result<PointGeometry>> = OnceCell::new();
    let geo = || -> Result<&PointGeometry> {
        let g = geometry.get_or_init(|| match &scenario.coframe {
            Some(cf) => analyze(cf, point),
            None => Err(GeomError::InvalidParameter(
                "scenario has no coframe".into(),
            )),
        });
        g.as_ref().map_err(Clone::clone)
    };
    checks
        .iter()
        .map(|&(check, tol)| evaluate_one(scenario, ctx, check, tol, point, &geo))
        .collect()
}

fn cr_point(point: &[f64]) -> &[f64] {
    &point[..3]
}

fn normalized_at<'a>(
    scenario: &Scenario,
    ctx: &'a CheckContext,
    x: &[f64],
) -> Result<&'a CrStructure> {
    let cr = scenario
        .cr
        .as_ref()
        .ok_or_else(|| GeomError::InvalidParameter("no CR data".into()))?;
    let w = cr.levi_coefficient(x)?;
    if w.abs() < LEVI_FLOOR {
        return Err(GeomError::DomainGuard(format!(
            "Levi coefficient {w:.3e} is degenerate"
        )));
    }
    ctx.normalized
        .as_ref()
        .ok_or_else(|| GeomError::InvalidParameter("no CR data".into()))
}

fn evaluate_one<'g>(
    scenario: &Scenario,
    ctx: &CheckContext,
    check: CheckKind,
    tol: f64,
    point: &[f64],
    geo: &dyn Fn() -> Result<&'g PointGeometry>,
) -> Result<Sample> {
    applicable(scenario, check)?;
    let reference = &scenario.reference;
    match check {
        CheckKind::RicciBlocks => {
            let g = geo()?;
            let l = scenario.lambda;
            let mut abs: f64 = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let want = C64::new(l * frame_metric(i, j), 0.0);
                    abs = abs.max((g.curvature.ricci[i][j] - want).norm());
                }
            }
            Ok(Sample::within(
                abs,
                abs / curvature_scale(&g.curvature),
                tol,
            ))
        }
        CheckKind::WeylScalars => {
            let g = geo()?;
            let want = (reference.psi.as_ref().expect("checked by applicable"))(point);
            let mut abs: f64 = 0.0;
            let mut scale: f64 = 1.0;
            for (n, w) in want.iter().enumerate() {
                if let Some(w) = w {
                    abs = abs.max((g.curvature.psi[n] - w).norm());
                    scale = scale.max(w.norm());
                }
            }
            Ok(Sample::within(abs, abs / scale, tol))
        }
        CheckKind::GoldbergSachs => {
            let g = geo()?;
            let abs = g.curvature.psi[0].norm().max(g.curvature.psi[1].norm());
            Ok(Sample::within(
                abs,
                abs / curvature_scale(&g.curvature),
                tol,
            ))
        }
        CheckKind::Classify => {
            let g = geo()?;
            let label = classify(&g.curvature.psi, tol).label;
            let ok = reference.label.is_none_or(|want| want == label);
            let r = if ok { 0.0 } else { 1.0 };
            Ok(Sample {
                abs: r,
                rel: r,
                pass: ok,
                label: Some(label),
            })
        }
        CheckKind::Shearfree => {
            let OpticalScalars {
                kappa, sigma, rho, ..
            } = geo()?.optical;
            let abs = kappa.norm().max(sigma.norm());
            Ok(Sample::within(abs, abs / rho.norm().max(1.0), tol))
        }
        CheckKind::Levi => {
            let cr = scenario.cr.as_ref().expect("checked by applicable");
            let x = cr_point(point);
            let want = (reference.levi.as_ref().expect("checked by applicable"))(point);
            let abs = (cr.levi_coefficient(x)? - want).abs();
            Ok(Sample::within(abs, abs, tol))
        }
        CheckKind::StructureEquations => {
            let g = geo()?;
            let mut abs = g.structure.residual.max(g.connection.residual);
            for th in &g.frame.theta {
                abs = abs.max(th.d()?.d()?.max_abs());
            }
            Ok(Sample::within(abs, abs, tol))
        }
        CheckKind::CurvatureIdentities => {
            let g = geo()?;
            let abs = identity_residuals(&g.curvature).max();
            Ok(Sample::within(
                abs,
                abs / curvature_scale(&g.curvature),
                tol,
            ))
        }
        CheckKind::CrCommutator => {
            let x = cr_point(point);
            let n = normalized_at(scenario, ctx, x)?;
            let mut abs = n.duality_residual(x)?;
            for f in &ctx.fields {
                abs = abs.max(n.commutator_residual(f, x)?.norm());
            }
            Ok(Sample::within(abs, abs, tol))
        }
        CheckKind::CrStructureFunction => {
            let x = cr_point(point);
            let n = normalized_at(scenario, ctx, x)?;
            let sf = n.structure_function_c(x)?;
            let abs = sf.ee0.norm().max(sf.conj_residual).max(sf.levi_residual);
            Ok(Sample::within(abs, abs, tol))
        }
        CheckKind::CrSecondForm => {
            let x = cr_point(point);
            let n = normalized_at(scenario, ctx, x)?;
            let mut abs: f64 = 0.0;
            for t in &ctx.fields {
                let a = n.second_cr_form_residual(t, x)?;
                let b = n.residual_ee5(t, x)?;
                abs = abs.max((a - C64::new(0.0, 1.0) * b.conj()).norm());
            }
            Ok(Sample::within(abs, abs, tol))
        }
        CheckKind::CrMaxwellEquivalence => {
            let x = cr_point(point);
            let n = normalized_at(scenario, ctx, x)?;
            let mut abs: f64 = 0.0;
            for f in &ctx.fields {
                let a = n.maxwell_form_coefficient(f, x)?;
                let b = n.residual_maxwell_nbm(f, x)?;
                abs = abs.max((a - b.conj()).norm());
            }
            Ok(Sample::within(abs, abs, tol))
        }
        CheckKind::Maxwell => {
            let cr = scenario.cr.as_ref().expect("checked by applicable");
            let cf = scenario.coframe.as_ref().expect("checked by applicable");
            let pair = reference.maxwell.as_ref().expect("checked by applicable");
            let good = maxwell_check(cr, cf, &pair.solution, point)?;
            let bad = maxwell_check(cr, cf, &pair.non_solution, point)?;
            let abs = good
                .df_residual
                .max(good.nullness)
                .max(good.asd_residual)
                .max(good.equivalence_residual());
            Ok(Sample {
                abs,
                rel: abs,
                pass: abs <= tol && bad.df_residual > 0.1,
                label: None,
            })
        }
        CheckKind::CartanCovanishing => {
            let g = geo()?;
            let x = cr_point(point);
            let n = normalized_at(scenario, ctx, x)?;
            let cartan = n.cartan_invariant(x)?.norm();
            let psi4 = g.curvature.psi[4].norm();
            let ok = (psi4 < tol) == (cartan < tol);
            let r = if ok { 0.0 } else { 1.0 };
            Ok(Sample {
                abs: r,
                rel: r,
                pass: ok,
                label: None,
            })
        }
        CheckKind::Periodicity => {
            let fields = scenario.reduced.as_ref().expect("checked by applicable");
            let cf = scenario.coframe.as_ref().expect("checked by applicable");
            let abs = periodicity_residual(fields, cf, point)?;
            Ok(Sample::within(abs, abs, tol))
        }
    }
}

/// Aggregate of one check over a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub check: CheckKind,
    pub tol: f64,
    /// Points evaluated successfully.
    pub samples: usize,
    pub skipped: usize,
    pub failed_points: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    /// Per-point labels (classification checks), `None` for skipped points.
    pub labels: Vec<Option<PetrovLabel>>,
    pub pass: bool,
    /// First hard error, if any; such an error makes the run an evaluation failure.
    pub error: Option<GeomError>,
}

/// Largest fraction of skipped points a passing check may have.
pub const MAX_SKIPPED_FRACTION: f64 = 0.1;

impl CheckOutcome {
    /// Folds per-point results in point order. Singularities are skipped and
    /// counted; any other error is kept as a hard failure.
    pub fn assemble(check: CheckKind, tol: f64, results: &[Result<Sample>]) -> CheckOutcome {
        let mut out = CheckOutcome {
            check,
            tol,
            samples: 0,
            skipped: 0,
            failed_points: 0,
            max_abs: 0.0,
            max_rel: 0.0,
            labels: Vec::with_capacity(results.len()),
            pass: true,
            error: None,
        };
        for r in results {
            match r {
                Ok(s) => {
                    out.samples += 1;
                    out.max_abs = out.max_abs.max(s.abs);
                    out.max_rel = out.max_rel.max(s.rel);
                    if s.abs.is_nan() || s.rel.is_nan() {
                        out.max_abs = f64::NAN;
                        out.max_rel = f64::NAN;
                    }
                    if !s.pass {
                        out.failed_points += 1;
                    }
                    out.labels.push(s.label);
                }
                Err(e) if e.is_singularity() => {
                    out.skipped += 1;
                    out.labels.push(None);
                }
                Err(e) => {
                    if out.error.is_none() {
                        out.error = Some(e.clone());
                    }
                    out.labels.push(None);
                }
            }
        }
        let total = results.len();
        out.pass = out.error.is_none()
            && out.samples > 0
            && out.failed_points == 0
            && (out.skipped as f64) <= MAX_SKIPPED_FRACTION * total as f64;
        out
    }
}

/// Runs checks sequentially over `points`.
pub fn run_checks(
    scenario: &Scenario,
    checks: &[(CheckKind, f64)],
    points: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<CheckOutcome>> {
    for &(c, _) in checks {
        applicable(scenario, c)?;
    }
    let ctx = CheckContext::new(scenario, seed)?;
    let per_point: Vec<Vec<Result<Sample>>> = points
        .iter()
        .map(|p| evaluate_point(scenario, &ctx, checks, p))
        .collect();
    Ok(checks
        .iter()
        .enumerate()
        .map(|(k, &(c, tol))| {
            let column: Vec<Result<Sample>> = per_point.iter().map(|row| row[k].clone()).collect();
            CheckOutcome::assemble(c, tol, &column)
        })
        .collect())
}

/// Runs the scenario's own expected-property list.
pub fn run_expected(
    scenario: &Scenario,
    points: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<CheckOutcome>> {
    let checks: Vec<(CheckKind, f64)> =
        scenario.expected.iter().map(|e| (e.check, e.tol)).collect();
    run_checks(scenario, &checks, points, seed)
}

/// Pointwise diagnostics for grid tables.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub levi: Option<f64>,
    pub optical: Option<OpticalScalars>,
    pub psi: Option<[C64; 5]>,
    pub label: Option<PetrovLabel>,
}

/// Levi coefficient, optical scalars, Weyl scalars and label at a point;
/// pieces the scenario has no data for are `None`.
pub fn grid_row(scenario: &Scenario, point: &[f64], classify_tol: f64) -> Result<GridRow> {
    if let Err(reason) = scenario.domain.check(point) {
        return Err(GeomError::DomainGuard(reason));
    }
    let levi = match &scenario.cr {
        Some(cr) => Some(cr.levi_coefficient(cr_point(point))?),
        None => None,
    };
    let (optical, psi, label) = match &scenario.coframe {
        Some(cf) => {
            let g = analyze(cf, point)?;
            let label = classify(&g.curvature.psi, classify_tol).label;
            (Some(g.optical), Some(g.curvature.psi), Some(label))
        }
        None => (None, None, None),
    };
    Ok(GridRow {
        levi,
        optical,
        psi,
        label,
    })
}
