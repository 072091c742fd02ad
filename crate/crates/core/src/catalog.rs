//! Built-in scenarios: CR data, their lifts, sampling domains and the
//! properties each one is expected to satisfy.
//!
//! Complex coordinates are stored as real pairs; the chart of every lifted
//! scenario is `(u, z_re, z_im, r)` and `ζζ̄ = z_re² + z_im²`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checks::CheckKind;
use crate::crstruct::CrStructure;
use crate::error::{GeomError, Result};
use crate::exprlang::parse;
use crate::forms::ScalarField;
use crate::jets::C64;
use crate::lift::{
    lift_fefferman, lift_general, lift_reduced, psi2_closed, reduced_fields, LiftParameters,
    LiftShape, ReducedFields,
};
use crate::nullframe::NullCoframe;
use crate::petrov::PetrovLabel;

pub const CR_CHART: [&str; 3] = ["u", "z_re", "z_im"];
pub const LIFT_CHART: [&str; 4] = ["u", "z_re", "z_im", "r"];

/// Largest magnitude accepted for numeric parameters.
pub const PARAM_BOUND: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => write!(f, "{v}"),
            ParamValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

/// A parameter slot as exposed on the command line.
#[derive(Debug, Clone, Copy)]
pub struct ParamSlot {
    pub key: &'static str,
    pub kind: &'static str,
    pub range: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static [ParamSlot],
    pub summary: &'static str,
}

const fn num(key: &'static str) -> ParamSlot {
    ParamSlot {
        key,
        kind: "number",
        range: "finite, |value| <= 10",
    }
}

const ENTRIES: [CatalogEntry; 6] = [
    CatalogEntry {
        name: "minkowski",
        params: &[],
        summary: "flat space as the lift of the Levi-flat structure (du, dζ)",
    },
    CatalogEntry {
        name: "kerr_family",
        params: &[num("m"), num("a"), num("b")],
        summary: "Ricci-flat family over ζ; a = b = 0 is Schwarzschild, m = a = 0 Taub-NUT type",
    },
    CatalogEntry {
        name: "heisenberg",
        params: &[],
        summary: "normalized Heisenberg structure λ = du − z_im dz_re + z_re dz_im, μ = dζ",
    },
    CatalogEntry {
        name: "robinson_maxwell",
        params: &[],
        summary: "Robinson congruence in Minkowski space with the null field f = u − iζζ̄",
    },
    CatalogEntry {
        name: "fefferman_of",
        params: &[ParamSlot {
            key: "c",
            kind: "expression",
            range: "ε*(z_re - i*z_im) with real |ε| <= 10",
        }],
        summary: "Fefferman lift of the normalized structure with structure function c",
    },
    CatalogEntry {
        name: "taubnut_like",
        params: &[num("M")],
        summary: "reduced lift over Heisenberg with p = 1, s = t = 0, m = iM, Λ = 0",
    },
];

pub fn catalog_list() -> &'static [CatalogEntry] {
    &ENTRIES
}

type Guard = Arc<dyn Fn(&[f64]) -> Option<String> + Send + Sync>;

/// Axis-aligned sampling box plus an exclusion guard.
#[derive(Clone)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    guard: Option<Guard>,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("guarded", &self.guard.is_some())
            .finish()
    }
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Domain {
        Domain {
            lo,
            hi,
            guard: None,
        }
    }

    pub fn guarded(
        mut self,
        guard: impl Fn(&[f64]) -> Option<String> + Send + Sync + 'static,
    ) -> Domain {
        self.guard = Some(Arc::new(guard));
        self
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Same guard, different box.
    pub fn with_box(&self, lo: Vec<f64>, hi: Vec<f64>) -> Result<Domain> {
        if lo.len() != self.dim() || hi.len() != self.dim() {
            return Err(GeomError::InvalidParameter(format!(
                "domain box needs {} coordinates",
                self.dim()
            )));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite())
        {
            return Err(GeomError::InvalidParameter(
                "domain box needs finite lo <= hi".into(),
            ));
        }
        Ok(Domain {
            lo,
            hi,
            guard: self.guard.clone(),
        })
    }

    /// `Err(reason)` when the point is outside the box or excluded.
    pub fn check(&self, point: &[f64]) -> std::result::Result<(), String> {
        if point.len() != self.dim() {
            return Err(format!(
                "point has {} coordinates, expected {}",
                point.len(),
                self.dim()
            ));
        }
        for (k, x) in point.iter().enumerate() {
            if *x < self.lo[k] || *x > self.hi[k] {
                return Err(format!(
                    "coordinate {k} = {x} outside [{}, {}]",
                    self.lo[k], self.hi[k]
                ));
            }
        }
        match &self.guard {
            Some(g) => g(point).map_or(Ok(()), Err),
            None => Ok(()),
        }
    }

    /// `count` accepted points drawn uniformly from the box with
    /// `ChaCha8Rng::seed_from_u64(seed)`; one draw per coordinate, in order,
    /// rejected candidates are discarded.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut tries = 0usize;
        while out.len() < count {
            tries += 1;
            if tries > 1000 * count.max(1) {
                return Err(GeomError::DomainGuard(
                    "sampling domain is (nearly) empty".into(),
                ));
            }
            let p: Vec<f64> = self
                .lo
                .iter()
                .zip(&self.hi)
                .map(|(&a, &b)| if a == b { a } else { rng.gen_range(a..b) })
                .collect();
            if self.check(&p).is_ok() {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Tensor grid with `shape[k]` nodes along axis `k`, first axis slowest.
    /// A single node sits at the midpoint. Excluded points are kept; callers
    /// skip them.
    pub fn grid(&self, shape: &[usize]) -> Result<Vec<Vec<f64>>> {
        if shape.len() != self.dim() || shape.contains(&0) {
            return Err(GeomError::InvalidParameter(format!(
                "grid shape needs {} positive entries",
                self.dim()
            )));
        }
        let axes: Vec<Vec<f64>> = shape
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let (a, b) = (self.lo[k], self.hi[k]);
                if n == 1 {
                    vec![0.5 * (a + b)]
                } else {
                    (0..n)
                        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |x| {
                        let mut q = p.clone();
                        q.push(*x);
                        q
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

/// One machine-readable assertion: run `check` at every sample, within `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub check: CheckKind,
    pub tol: f64,
}

impl Expectation {
    pub fn default_for(check: CheckKind) -> Expectation {
        Expectation {
            check,
            tol: check.default_tol(),
        }
    }
}

pub type PointFn<T> = Arc<dyn Fn(&[f64]) -> T + Send + Sync>;

/// A Maxwell candidate `f` that must solve and one that must not.
#[derive(Clone)]
pub struct MaxwellPair {
    pub solution: ScalarField,
    pub non_solution: ScalarField,
}

/// Closed-form values the checks compare against.
#[derive(Clone, Default)]
pub struct Reference {
    /// Levi coefficient of the structure as given (not normalized).
    pub levi: Option<PointFn<f64>>,
    /// Expected Weyl scalars; `None` entries are not compared.
    pub psi: Option<PointFn<[Option<C64>; 5]>>,
    pub label: Option<PetrovLabel>,
    pub maxwell: Option<MaxwellPair>,
}

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub params: Params,
    /// Chart of the sample points: the lifted chart when a coframe is present.
    pub chart: Vec<String>,
    pub cr: Option<CrStructure>,
    pub coframe: Option<NullCoframe>,
    /// Cosmological constant the coframe is meant to satisfy.
    pub lambda: f64,
    pub reduced: Option<ReducedFields>,
    pub domain: Domain,
    pub reference: Reference,
    pub expected: Vec<Expectation>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("chart", &self.chart)
            .field("has_cr", &self.cr.is_some())
            .field("has_coframe", &self.coframe.is_some())
            .field("lambda", &self.lambda)
            .field("domain", &self.domain)
            .field("expected", &self.expected)
            .finish()
    }
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.chart.len()
    }

    /// Display form `name(k=v, …)`.
    pub fn label(&self) -> String {
        if self.params.is_empty() {
            return self.name.clone();
        }
        let inner: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("{}({})", self.name, inner.join(", "))
    }
}

/// Scenario with the stated parameters; unknown names and keys, missing keys
/// and values outside the documented ranges are rejected.
pub fn catalog_get(name: &str, params: &Params) -> Result<Scenario> {
    let entry = ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| GeomError::UnknownScenario(name.to_string()))?;
    for key in params.keys() {
        if !entry.params.iter().any(|p| p.key == key) {
            return Err(GeomError::InvalidParameter(format!(
                "{name} has no parameter `{key}`"
            )));
        }
    }
    let number = |key: &str| -> Result<f64> {
        match params.get(key) {
            Some(ParamValue::Number(v)) if v.is_finite() && v.abs() <= PARAM_BOUND => Ok(*v),
            Some(ParamValue::Number(v)) => Err(GeomError::InvalidParameter(format!(
                "{name}: `{key}` = {v} outside [-{PARAM_BOUND}, {PARAM_BOUND}]"
            ))),
            Some(ParamValue::Text(_)) => Err(GeomError::InvalidParameter(format!(
                "{name}: `{key}` must be a number"
            ))),
            None => Err(GeomError::InvalidParameter(format!(
                "{name}: missing `{key}`"
            ))),
        }
    };
    let mut sc = match name {
        "minkowski" => minkowski()?,
        "kerr_family" => kerr_family(number("m")?, number("a")?, number("b")?)?,
        "heisenberg" => heisenberg_scenario()?,
        "robinson_maxwell" => robinson_maxwell()?,
        "fefferman_of" => match params.get("c") {
            Some(ParamValue::Text(src)) => fefferman_of(src)?,
            Some(ParamValue::Number(v)) => fefferman_of(&format!("({v:e})"))?,
            None => {
                return Err(GeomError::InvalidParameter(
                    "fefferman_of: missing `c`".into(),
                ))
            }
        },
        "taubnut_like" => taubnut_like(number("M")?)?,
        _ => unreachable!("entry table and dispatch agree"),
    };
    sc.params = params.clone();
    Ok(sc)
}

fn lit(v: f64) -> String {
    format!("({v:e})")
}

fn field(src: &str, chart: &[&str]) -> Result<ScalarField> {
    Ok(ScalarField::from_expr(parse(src, chart)?))
}

fn constant4(v: f64) -> ScalarField {
    ScalarField::constant(4, C64::new(v, 0.0))
}

fn zeta_sq(p: &[f64]) -> f64 {
    p[1] * p[1] + p[2] * p[2]
}

fn zero_psi() -> PointFn<[Option<C64>; 5]> {
    Arc::new(|_| [Some(C64::new(0.0, 0.0)); 5])
}

fn base(name: &str, chart: &[&str], domain: Domain) -> Scenario {
    Scenario {
        name: name.to_string(),
        params: Params::new(),
        chart: chart.iter().map(|s| s.to_string()).collect(),
        cr: None,
        coframe: None,
        lambda: 0.0,
        reduced: None,
        domain,
        reference: Reference::default(),
        expected: Vec::new(),
    }
}

fn expect(checks: &[CheckKind]) -> Vec<Expectation> {
    checks
        .iter()
        .map(|&c| Expectation::default_for(c))
        .collect()
}

const GEOMETRY: [CheckKind; 4] = [
    CheckKind::RicciBlocks,
    CheckKind::Shearfree,
    CheckKind::StructureEquations,
    CheckKind::CurvatureIdentities,
];

const CR_SUITE: [CheckKind; 4] = [
    CheckKind::CrCommutator,
    CheckKind::CrStructureFunction,
    CheckKind::CrSecondForm,
    CheckKind::CrMaxwellEquivalence,
];

fn heisenberg_cr() -> Result<CrStructure> {
    Ok(
        CrStructure::from_exprs(&CR_CHART, &["1", "-z_im", "z_re"], &["0", "1", "i"])?
            .assume_normalized(),
    )
}

fn minkowski() -> Result<Scenario> {
    let cr = CrStructure::from_exprs(&CR_CHART, &["1", "0", "0"], &["0", "1", "i"])?;
    let coframe = lift_general(
        &cr,
        &constant4(1.0),
        &constant4(0.0),
        &constant4(0.0),
        LiftShape::Transverse,
    );
    let mut sc = base(
        "minkowski",
        &LIFT_CHART,
        Domain::new(vec![-2.0; 4], vec![2.0; 4]),
    );
    sc.cr = Some(cr);
    sc.coframe = Some(coframe);
    sc.reference = Reference {
        levi: Some(Arc::new(|_| 0.0)),
        psi: Some(zero_psi()),
        label: Some(PetrovLabel::Zero),
        maxwell: None,
    };
    sc.expected = expect(&GEOMETRY);
    sc.expected.extend(expect(&[
        CheckKind::WeylScalars,
        CheckKind::Classify,
        CheckKind::Levi,
    ]));
    Ok(sc)
}

/// Closed-form Levi coefficient of the Kerr-family `λ`:
/// `((a+b)ζζ̄ − 2(a−b)) / (1 + ζζ̄/2)³`.
pub fn kerr_levi(a: f64, b: f64, zeta_sq: f64) -> f64 {
    ((a + b) * zeta_sq - 2.0 * (a - b)) / (1.0 + zeta_sq / 2.0).powi(3)
}

/// `𝒫²` of the Kerr family.
pub fn kerr_p_squared(a: f64, b: f64, zeta_sq: f64, r: f64) -> f64 {
    let q = 1.0 + zeta_sq / 2.0;
    let k = b - a + (b + a) * zeta_sq / 2.0;
    r * r / (q * q) + k * k / q.powi(4)
}

/// Kerr-family CR data `λ = du + F dζ + F̄ dζ̄` with
/// `F = i(2b + (a+b)ζζ̄) / (ζ(1+ζζ̄/2)²)` and `μ = dζ`.
pub fn kerr_cr(a: f64, b: f64) -> Result<CrStructure> {
    let (a, b) = (lit(a), lit(b));
    let s = "(z_re^2 + z_im^2)";
    let k = format!("(2*{b} + ({a} + {b})*{s})/(1 + {s}/2)^2");
    let lx = format!("2*{k}*z_im/{s}");
    let ly = format!("-2*{k}*z_re/{s}");
    CrStructure::from_exprs(&CR_CHART, &["1", &lx, &ly], &["0", "1", "i"])
}

fn kerr_family(m: f64, a: f64, b: f64) -> Result<Scenario> {
    let cr = kerr_cr(a, b)?;
    let (ml, al, bl) = (lit(m), lit(a), lit(b));
    let s = "(z_re^2 + z_im^2)";
    let q = format!("(1 + {s}/2)");
    let k = format!("({bl} - {al} + ({bl} + {al})*{s}/2)");
    let p = field(&format!("sqrt(r^2/{q}^2 + {k}^2/{q}^4)"), &LIFT_CHART)?;
    let w = field(&format!("i*{al}*(z_re - i*z_im)/{q}^2"), &LIFT_CHART)?;
    let h = field(
        &format!(
            "-1/2 + ({ml}*r + {bl}^2 - {al}*{bl}*(1 - {s}/2)/(1 + {s}/2))/(r^2 + {k}^2/{q}^2)"
        ),
        &LIFT_CHART,
    )?;
    let coframe = lift_general(&cr, &p, &w, &h, LiftShape::Transverse);
    let domain =
        Domain::new(vec![-2.0, -2.0, -2.0, 0.5], vec![2.0, 2.0, 2.0, 4.0]).guarded(move |x| {
            let s = zeta_sq(x);
            if s < 0.25 * 0.25 {
                Some(format!("|ζ| = {:.3} too close to ζ = 0", s.sqrt()))
            } else if kerr_p_squared(a, b, s, x[3]) < 1e-4 {
                Some("too close to the zero set of 𝒫²".into())
            } else {
                None
            }
        });
    let mut sc = base("kerr_family", &LIFT_CHART, domain);
    sc.cr = Some(cr);
    sc.coframe = Some(coframe);
    let z = Some(C64::new(0.0, 0.0));
    sc.reference = Reference {
        levi: Some(Arc::new(move |x| kerr_levi(a, b, zeta_sq(x)))),
        psi: Some(Arc::new(move |_| [z, z, None, None, None])),
        label: (m != 0.0 || b != 0.0).then_some(PetrovLabel::IIOrD),
        maxwell: None,
    };
    sc.expected = expect(&GEOMETRY);
    sc.expected.extend(expect(&[
        CheckKind::GoldbergSachs,
        CheckKind::WeylScalars,
        CheckKind::Levi,
    ]));
    if sc.reference.label.is_some() {
        sc.expected
            .push(Expectation::default_for(CheckKind::Classify));
    }
    Ok(sc)
}

fn heisenberg_scenario() -> Result<Scenario> {
    let mut sc = base(
        "heisenberg",
        &CR_CHART,
        Domain::new(vec![-2.0; 3], vec![2.0; 3]),
    );
    sc.cr = Some(heisenberg_cr()?);
    sc.reference.levi = Some(Arc::new(|_| 1.0));
    sc.expected = expect(&CR_SUITE);
    sc.expected.push(Expectation::default_for(CheckKind::Levi));
    Ok(sc)
}

fn robinson_maxwell() -> Result<Scenario> {
    let cr = CrStructure::from_exprs(&CR_CHART, &["1", "2*z_im", "-2*z_re"], &["0", "1", "i"])?;
    let p = field("sqrt(r^2 + 1)", &LIFT_CHART)?;
    let coframe = lift_general(
        &cr,
        &p,
        &constant4(0.0),
        &constant4(0.0),
        LiftShape::Transverse,
    );
    let mut sc = base(
        "robinson_maxwell",
        &LIFT_CHART,
        Domain::new(vec![-2.0; 4], vec![2.0; 4]),
    );
    sc.cr = Some(cr);
    sc.coframe = Some(coframe);
    sc.reference = Reference {
        levi: Some(Arc::new(|_| -2.0)),
        psi: Some(zero_psi()),
        label: Some(PetrovLabel::Zero),
        maxwell: Some(MaxwellPair {
            solution: field("u - i*(z_re^2 + z_im^2)", &CR_CHART)?,
            non_solution: field("z_re - i*z_im", &CR_CHART)?,
        }),
    };
    sc.expected = expect(&GEOMETRY);
    sc.expected.extend(expect(&[
        CheckKind::WeylScalars,
        CheckKind::Classify,
        CheckKind::Levi,
        CheckKind::Maxwell,
    ]));
    sc.expected.extend(expect(&CR_SUITE));
    Ok(sc)
}

/// Normalized structure with `μ = dζ` and `c = εζ̄`:
/// `λ = du + A dζ + Ā dζ̄`, `A = ζ̄(−εu + iG(ζζ̄))`, `G(s) = (1 − e^{εs})/(2εs)`.
/// `G` has a removable singularity at `ζ = 0`, which the formula cannot evaluate.
pub fn eps_family_cr(eps: f64) -> Result<CrStructure> {
    if eps == 0.0 {
        return heisenberg_cr();
    }
    let e = lit(eps);
    let s = "(z_re^2 + z_im^2)";
    let g = format!("((1 - exp({e}*{s}))/(2*{e}*{s}))");
    let lx = format!("2*(-{e}*u*z_re + {g}*z_im)");
    let ly = format!("-2*({e}*u*z_im + {g}*z_re)");
    Ok(CrStructure::from_exprs(&CR_CHART, &["1", &lx, &ly], &["0", "1", "i"])?.assume_normalized())
}

/// Reads `ε` from a structure function `c = εζ̄` by probing.
fn probe_eps(src: &str) -> Result<f64> {
    let c = parse(src, &CR_CHART)?;
    let probes = [
        [0.3, 0.7, -0.4],
        [-1.1, -0.2, 0.9],
        [0.8, 1.3, 0.5],
        [2.0, -0.6, -1.2],
    ];
    let mut eps: Option<C64> = None;
    for x in probes {
        let zb = C64::new(x[1], -x[2]);
        let e = c.eval(&x)? / zb;
        match eps {
            None => eps = Some(e),
            Some(e0) if (e - e0).norm() <= 1e-12 * e0.norm().max(1.0) => {}
            Some(_) => {
                return Err(GeomError::InvalidParameter(format!(
                    "fefferman_of: c = `{src}` is not of the form ε*(z_re - i*z_im)"
                )))
            }
        }
    }
    let e = eps.unwrap_or_default();
    if e.im.abs() > 1e-12 * e.norm().max(1.0) {
        return Err(GeomError::InvalidParameter(format!(
            "fefferman_of: ε = {e} is not real"
        )));
    }
    if !(e.re.abs() <= PARAM_BOUND) {
        return Err(GeomError::InvalidParameter(format!(
            "fefferman_of: |ε| = {} too large",
            e.re.abs()
        )));
    }
    Ok(e.re)
}

fn fefferman_of(src: &str) -> Result<Scenario> {
    let eps = probe_eps(src)?;
    let cr = eps_family_cr(eps)?;
    let coframe = lift_fefferman(&cr)?;
    let mut domain = Domain::new(vec![-1.0, -1.5, -1.5, -3.0], vec![1.0, 1.5, 1.5, 3.0]);
    if eps != 0.0 {
        domain = domain.guarded(|x| {
            (zeta_sq(x) < 0.25).then(|| format!("|ζ| = {:.3} below 0.5", zeta_sq(x).sqrt()))
        });
    }
    let mut sc = base("fefferman_of", &LIFT_CHART, domain);
    sc.cr = Some(cr);
    sc.coframe = Some(coframe);
    let z = Some(C64::new(0.0, 0.0));
    sc.reference = Reference {
        levi: Some(Arc::new(|_| 1.0)),
        psi: Some(if eps == 0.0 {
            zero_psi()
        } else {
            Arc::new(move |_| [z, z, z, z, None])
        }),
        label: Some(if eps == 0.0 {
            PetrovLabel::Zero
        } else {
            PetrovLabel::N
        }),
        maxwell: None,
    };
    sc.expected = expect(&[
        CheckKind::Shearfree,
        CheckKind::StructureEquations,
        CheckKind::CurvatureIdentities,
        CheckKind::WeylScalars,
        CheckKind::Classify,
        CheckKind::Levi,
        CheckKind::CartanCovanishing,
    ]);
    sc.expected.extend(expect(&CR_SUITE));
    Ok(sc)
}

/// Excluded region of `taubnut_like` is `|r| >= TAUBNUT_R_MAX`.
pub const TAUBNUT_R_MAX: f64 = std::f64::consts::PI - 0.1;
/// Default sampling box edge in `r`, strictly inside the guard so grid
/// endpoints survive.
pub const TAUBNUT_R_BOX: f64 = 3.0;

fn taubnut_like(big_m: f64) -> Result<Scenario> {
    let cr = heisenberg_cr()?;
    let m = C64::new(0.0, big_m);
    let params = LiftParameters::trivial(ScalarField::constant(3, m), 0.0);
    let coframe = lift_reduced(&cr, &params)?;
    let domain = Domain::new(
        vec![-1.0, -1.0, -1.0, -TAUBNUT_R_BOX],
        vec![1.0, 1.0, 1.0, TAUBNUT_R_BOX],
    )
    .guarded(|x| {
        (x[3].abs() >= TAUBNUT_R_MAX).then(|| format!("|r| = {} not below π − 0.1", x[3].abs()))
    });
    let mut sc = base("taubnut_like", &LIFT_CHART, domain);
    sc.reduced = Some(reduced_fields(&cr, &params));
    sc.cr = Some(cr);
    sc.coframe = Some(coframe);
    sc.reference = Reference {
        levi: Some(Arc::new(|_| 1.0)),
        psi: Some(Arc::new(move |x| {
            let z = Some(C64::new(0.0, 0.0));
            [z, z, Some(psi2_closed(m, 1.0, x[3], 0.0)), None, None]
        })),
        label: Some(if big_m == 0.0 {
            PetrovLabel::Zero
        } else {
            PetrovLabel::IIOrD
        }),
        maxwell: None,
    };
    sc.expected = expect(&GEOMETRY);
    sc.expected.extend(expect(&[
        CheckKind::GoldbergSachs,
        CheckKind::WeylScalars,
        CheckKind::Classify,
        CheckKind::Levi,
        CheckKind::Periodicity,
    ]));
    sc.expected.extend(expect(&CR_SUITE));
    Ok(sc)
}

/// Lift data for a user-supplied structure.
#[derive(Debug, Clone, PartialEq)]
pub enum InlineLift {
    /// Reduced lift from `p, s, t, m` on the CR chart and `Λ`.
    Reduced {
        p: String,
        s: String,
        t: String,
        m: String,
        lambda: f64,
    },
    /// `P, W, H` on the lifted chart.
    General {
        p: String,
        w: String,
        h: String,
        shape: LiftShape,
    },
}

/// A structure given by expressions rather than by catalog name.
#[derive(Debug, Clone, PartialEq)]
pub struct InlineDefinition {
    /// CR chart, three names; the lifted chart appends `r`.
    pub chart: Vec<String>,
    pub lambda: [String; 3],
    pub mu: [String; 3],
    /// Marks the pair as normalized (`ω ≡ 1`) instead of rescaling by `ω`.
    pub normalized: bool,
    pub lift: Option<InlineLift>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Builds a scenario from expressions; every expression is parsed here, before
/// any evaluation. Only the checks named by the caller apply.
pub fn inline_scenario(def: &InlineDefinition) -> Result<Scenario> {
    if def.chart.len() != 3 {
        return Err(GeomError::InvalidParameter(
            "inline chart needs three coordinates".into(),
        ));
    }
    if def.chart.iter().any(|c| c == crate::lift::FIBRE) {
        return Err(GeomError::InvalidParameter(
            "`r` is reserved for the fibre coordinate".into(),
        ));
    }
    let chart3: Vec<&str> = def.chart.iter().map(String::as_str).collect();
    let lam: Vec<&str> = def.lambda.iter().map(String::as_str).collect();
    let mu: Vec<&str> = def.mu.iter().map(String::as_str).collect();
    let mut cr = CrStructure::from_exprs(&chart3, &lam, &mu)?;
    if def.normalized {
        cr = cr.assume_normalized();
    }
    let mut chart4 = chart3.clone();
    chart4.push(crate::lift::FIBRE);
    let (chart, coframe, reduced, lambda) = match &def.lift {
        None => (chart3.clone(), None, None, 0.0),
        Some(InlineLift::Reduced { p, s, t, m, lambda }) => {
            let params = LiftParameters {
                p: field(p, &chart3)?,
                s: field(s, &chart3)?,
                t: field(t, &chart3)?,
                m: field(m, &chart3)?,
                lambda: *lambda,
            };
            let normalized = cr.normalize();
            let cf = lift_reduced(&normalized, &params)?;
            (
                chart4.clone(),
                Some(cf),
                Some(reduced_fields(&normalized, &params)),
                *lambda,
            )
        }
        Some(InlineLift::General { p, w, h, shape }) => {
            let cf = lift_general(
                &cr,
                &field(p, &chart4)?,
                &field(w, &chart4)?,
                &field(h, &chart4)?,
                *shape,
            );
            (chart4.clone(), Some(cf), None, 0.0)
        }
    };
    let domain = Domain::new(vec![0.0; chart.len()], vec![0.0; chart.len()])
        .with_box(def.lo.clone(), def.hi.clone())?;
    let mut sc = base("inline", &chart, domain);
    sc.cr = Some(cr);
    sc.coframe = coframe;
    sc.reduced = reduced;
    sc.lambda = lambda;
    Ok(sc)
}
