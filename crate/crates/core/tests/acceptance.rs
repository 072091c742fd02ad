//! Acceptance criteria 1–10. Runs without the libtest harness so every
//! criterion prints its own PASS/FAIL line; exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{frame_riemann_oracle, random_coframe};
use nullframe::catalog::{catalog_get, eps_family_cr, kerr_levi, ParamValue, Params, Scenario};
use nullframe::checks::{run_checks, CheckKind, CheckOutcome};
use nullframe::crstruct::CrStructure;
use nullframe::curvature::analyze;
use nullframe::lift::{lift_reduced, periodicity_residual, reduced_fields, LiftParameters};
use nullframe::maxwell::maxwell_check;
use nullframe::nullframe::{partner, NullCoframe};
use nullframe::{parse, ScalarField, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;
const KERR: [(f64, f64, f64); 4] = [
    (1.0, 0.0, 0.0),
    (1.0, 0.7, 0.0),
    (0.0, 0.0, 1.0),
    (1.0, 0.5, 0.2),
];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new() -> Verdict {
        Verdict {
            pass: true,
            detail: String::new(),
        }
    }

    fn note(&mut self, ok: bool, text: String) {
        self.pass &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&text);
        if !ok {
            self.detail.push_str(" [FAIL]");
        }
    }

    fn outcome(&mut self, what: &str, o: &CheckOutcome) {
        let text = format!(
            "{what} {} max_rel={:.2e} (n={}, skipped={})",
            o.check.name(),
            o.max_rel,
            o.samples,
            o.skipped
        );
        let ok = o.pass;
        let text = match &o.error {
            Some(e) => format!("{text} error: {e}"),
            None => text,
        };
        self.note(ok, text);
    }
}

fn numbers(kv: &[(&str, f64)]) -> Params {
    kv.iter()
        .map(|(k, v)| (k.to_string(), ParamValue::Number(*v)))
        .collect()
}

fn kerr(m: f64, a: f64, b: f64) -> Scenario {
    catalog_get("kerr_family", &numbers(&[("m", m), ("a", a), ("b", b)])).unwrap()
}

fn fefferman(c: &str) -> Scenario {
    let p: Params = [("c".to_string(), ParamValue::Text(c.into()))]
        .into_iter()
        .collect();
    catalog_get("fefferman_of", &p).unwrap()
}

fn sweep(sc: &Scenario, checks: &[(CheckKind, f64)], count: usize, seed: u64) -> Vec<CheckOutcome> {
    let pts = sc.domain.sample(count, seed).unwrap();
    run_checks(sc, checks, &pts, seed).unwrap()
}

fn criterion_1_2() -> (Verdict, Verdict) {
    let (mut ricci, mut gs) = (Verdict::new(), Verdict::new());
    for (m, a, b) in KERR {
        let sc = kerr(m, a, b);
        let out = sweep(
            &sc,
            &[
                (CheckKind::RicciBlocks, 1e-6),
                (CheckKind::GoldbergSachs, 1e-7),
            ],
            50,
            SEED,
        );
        let tag = format!("({m},{a},{b})");
        ricci.outcome(&tag, &out[0]);
        gs.outcome(&tag, &out[1]);
    }
    (ricci, gs)
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::new();
    for (m, a, b) in KERR {
        let sc = kerr(m, a, b);
        let cr = sc.cr.as_ref().unwrap();
        let mut worst: f64 = 0.0;
        let mut largest: f64 = 0.0;
        for x in sc.domain.sample(50, SEED + 1).unwrap() {
            let w = cr.levi_coefficient(&x[..3]).unwrap();
            worst = worst.max((w - kerr_levi(a, b, x[1] * x[1] + x[2] * x[2])).abs());
            largest = largest.max(w.abs());
        }
        v.note(
            worst < 1e-10,
            format!("({m},{a},{b}) |ω − closed form| = {worst:.2e}"),
        );
        if a == 0.0 && b == 0.0 {
            v.note(
                largest == 0.0,
                format!("Schwarzschild max |ω| = {largest:.2e}"),
            );
        }
    }
    v
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::new();
    let sc = catalog_get("taubnut_like", &numbers(&[("M", 1.0)])).unwrap();
    let out = sweep(
        &sc,
        &[
            (CheckKind::RicciBlocks, 1e-6),
            (CheckKind::WeylScalars, 1e-8),
            (CheckKind::Classify, 1e-7),
        ],
        50,
        SEED + 2,
    );
    for o in &out {
        v.outcome("M=1", o);
    }
    let cf = sc.coframe.as_ref().unwrap();
    let worst = sc
        .domain
        .sample(3, SEED + 3)
        .unwrap()
        .iter()
        .map(|x| oracle_deviation(cf, x))
        .fold(0.0, f64::max);
    v.note(worst < 1e-5, format!("FD oracle rel = {worst:.2e}"));
    v
}

fn criterion_5() -> Verdict {
    let mut v = Verdict::new();
    for c in ["0", "0.3*(z_re - i*z_im)"] {
        let sc = fefferman(c);
        // reference Ψ: Ψ0..Ψ3 = 0, and Ψ4 = 0 too when c = 0
        let out = sweep(
            &sc,
            &[(CheckKind::WeylScalars, 1e-7), (CheckKind::Classify, 1e-7)],
            30,
            SEED + 4,
        );
        for o in &out {
            v.outcome(&format!("c={c}"), o);
        }
        let grid = sc.domain.grid(&[1, 10, 10, 1]).unwrap();
        let out = run_checks(&sc, &[(CheckKind::CartanCovanishing, 1e-7)], &grid, SEED).unwrap();
        v.outcome(&format!("c={c} 10x10"), &out[0]);
    }
    v
}

fn every_scenario() -> Vec<Scenario> {
    let mut all = vec![
        catalog_get("minkowski", &Params::new()).unwrap(),
        catalog_get("robinson_maxwell", &Params::new()).unwrap(),
        catalog_get("taubnut_like", &numbers(&[("M", 1.0)])).unwrap(),
        catalog_get("heisenberg", &Params::new()).unwrap(),
        fefferman("0"),
        fefferman("0.3*(z_re - i*z_im)"),
    ];
    all.extend(KERR.iter().map(|&(m, a, b)| kerr(m, a, b)));
    all
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::new();
    for sc in every_scenario() {
        if sc.coframe.is_none() {
            // CR data only: d² = 0 on λ and μ
            let cr = sc.cr.as_ref().unwrap();
            let mut worst: f64 = 0.0;
            for x in sc.domain.sample(20, SEED + 5).unwrap() {
                let s = nullframe::Seeds::new(&x, 2).unwrap();
                for f in [cr.lambda(&s).unwrap(), cr.mu(&s).unwrap()] {
                    worst = worst.max(f.d().unwrap().d().unwrap().max_abs());
                }
            }
            v.note(
                worst < 1e-10,
                format!("{} d²(λ, μ) = {worst:.2e}", sc.label()),
            );
            continue;
        }
        let out = sweep(
            &sc,
            &[
                (CheckKind::StructureEquations, 1e-10),
                (CheckKind::CurvatureIdentities, 1e-9),
            ],
            20,
            SEED + 5,
        );
        for o in &out {
            v.outcome(&sc.label(), o);
        }
    }
    v
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();
    let checks = [
        (CheckKind::CrCommutator, 1e-8),
        (CheckKind::CrStructureFunction, 1e-9),
        (CheckKind::CrSecondForm, 1e-10),
        (CheckKind::CrMaxwellEquivalence, 1e-9),
    ];
    let structures = [
        catalog_get("heisenberg", &Params::new()).unwrap(),
        catalog_get("robinson_maxwell", &Params::new()).unwrap(),
        fefferman("0.3*(z_re - i*z_im)"),
        kerr(1.0, 0.5, 0.2),
    ];
    for sc in &structures {
        for o in sweep(sc, &checks, 20, SEED + 6) {
            v.outcome(&sc.label(), &o);
        }
    }
    v
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::new();
    let sc = catalog_get("robinson_maxwell", &Params::new()).unwrap();
    let (cr, cf) = (sc.cr.as_ref().unwrap(), sc.coframe.as_ref().unwrap());
    let pair = sc.reference.maxwell.as_ref().unwrap();
    let (mut df, mut null, mut asd, mut bad) = (0f64, 0f64, 0f64, f64::INFINITY);
    for x in sc.domain.sample(20, SEED + 7).unwrap() {
        let good = maxwell_check(cr, cf, &pair.solution, &x).unwrap();
        df = df.max(good.df_residual);
        null = null.max(good.nullness);
        asd = asd.max(good.asd_residual);
        bad = bad.min(
            maxwell_check(cr, cf, &pair.non_solution, &x)
                .unwrap()
                .df_residual,
        );
    }
    v.note(df < 1e-10, format!("dℱ = {df:.2e}"));
    v.note(null == 0.0, format!("ℱ∧ℱ = {null:.2e}"));
    v.note(asd < 1e-11, format!("*ℱ + iℱ = {asd:.2e}"));
    v.note(bad > 0.1, format!("non-solution min dℱ = {bad:.3}"));
    v
}

fn random_params(rng: &mut ChaCha8Rng, chart: &[&str]) -> LiftParameters {
    let [u, x, y] = [chart[0], chart[1], chart[2]];
    let mut k = || rng.gen_range(-0.5..0.5);
    let f = |src: String| ScalarField::from_expr(parse(&src, chart).unwrap());
    LiftParameters {
        p: f(format!(
            "1 + {:.5}*sin({:.5}*{u} + {x}) + {:.5}*{y}^2",
            0.3 * k(),
            k(),
            0.3 * k()
        )),
        s: f(format!(
            "{:.5}*{x} + {:.5}*cos({u} - {:.5}*{y})",
            k(),
            k(),
            k()
        )),
        t: f(format!(
            "({:.5} + i*{:.5})*{x} + {:.5}*{u}*{y}",
            k(),
            k(),
            k()
        )),
        m: f(format!(
            "({:.5} + i*{:.5})*exp({:.5}*{x}) + i*{:.5}*{u}",
            k(),
            k(),
            k(),
            k()
        )),
        lambda: k(),
    }
}

fn criterion_9() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let bases: [(&str, CrStructure); 2] = [
        (
            "heisenberg",
            catalog_get("heisenberg", &Params::new())
                .unwrap()
                .cr
                .unwrap(),
        ),
        ("c=0.3ζ̄", eps_family_cr(0.3).unwrap()),
    ];
    for (name, cr) in &bases {
        let chart: Vec<&str> = cr.chart().iter().map(String::as_str).collect();
        let mut worst: f64 = 0.0;
        let mut evaluated = 0;
        for _ in 0..5 {
            let params = random_params(&mut rng, &chart);
            let fields = reduced_fields(cr, &params);
            let cf = lift_reduced(cr, &params).unwrap();
            for _ in 0..6 {
                let x = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.5..1.2),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-2.5..2.5),
                ];
                match periodicity_residual(&fields, &cf, &x) {
                    Ok(r) => {
                        worst = worst.max(r);
                        evaluated += 1;
                    }
                    Err(e) if e.is_singularity() => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
        v.note(
            worst < 1e-12 && evaluated >= 27,
            format!("{name} rel = {worst:.2e} (n={evaluated})"),
        );
    }
    v
}

/// Largest deviation of the frame Riemann tensor from the coordinate
/// finite-difference oracle, relative to the oracle's largest component.
fn oracle_deviation(cf: &NullCoframe, x: &[f64]) -> f64 {
    let g = analyze(cf, x).unwrap();
    let oracle = frame_riemann_oracle(cf, x, 2e-3);
    let scale = oracle.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let got: C64 = g.curvature.riemann[partner(i)][j][k][l];
                    worst = worst.max((got - oracle[64 * i + 16 * j + 4 * k + l]).norm() / scale);
                }
            }
        }
    }
    worst
}

fn criterion_10() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    for seed in 0..3u64 {
        let cf = random_coframe(SEED + seed, 0.2);
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let d = oracle_deviation(&cf, &x);
        v.note(d < 1e-5, format!("metric {seed} rel = {d:.2e}"));
    }
    v
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (c1, c2) = criterion_1_2();
    let results = [
        ("Kerr-family Ricci flatness", c1),
        ("Goldberg–Sachs Ψ0 = Ψ1 = 0", c2),
        ("Levi-form closed form", criterion_3()),
        ("Taub-NUT-like exact lift", criterion_4()),
        ("Fefferman type N", criterion_5()),
        ("structure and tensor identities", criterion_6()),
        ("CR identity suite", criterion_7()),
        ("Robinson Maxwell field", criterion_8()),
        ("periodicity in r", criterion_9()),
        ("finite-difference oracle", criterion_10()),
    ];
    let mut failed = 0;
    for (n, (name, v)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {} {name}: {}",
            n + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1?}",
        results.len() - failed,
        start.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
