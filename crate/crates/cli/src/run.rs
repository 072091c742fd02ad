//! Point evaluation, report assembly and grid tables.

use std::fmt::Write as _;

use nullframe::checks::{
    evaluate_point, grid_row, CheckContext, CheckOutcome, Sample, MAX_SKIPPED_FRACTION,
};
use nullframe::petrov::DEFAULT_TOL;
use nullframe::GeomError;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Plan, Sampling, SCHEMA_VERSION};

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub tolerance: f64,
    pub samples: usize,
    pub skipped: usize,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct PointLabel {
    pub index: usize,
    pub coords: Vec<f64>,
    /// `null` for skipped points.
    pub label: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub chart: Vec<String>,
    pub sampling: Sampling,
    pub points: usize,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<PointLabel>>,
}

/// Outcome classes that decide the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    CheckFailure,
    EvaluationFailure,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::CheckFailure => 1,
            Status::EvaluationFailure => 3,
        }
    }
}

pub fn run_check(plan: &Plan) -> Result<(Report, Status), GeomError> {
    let sc = &plan.scenario;
    let ctx = CheckContext::new(sc, plan.sampling.seed)?;
    let rows: Vec<Vec<Result<Sample, GeomError>>> = plan
        .points
        .par_iter()
        .map(|p| evaluate_point(sc, &ctx, &plan.checks, p))
        .collect();
    let outcomes: Vec<CheckOutcome> = plan
        .checks
        .iter()
        .enumerate()
        .map(|(k, &(c, tol))| {
            let column: Vec<_> = rows.iter().map(|r| r[k].clone()).collect();
            CheckOutcome::assemble(c, tol, &column)
        })
        .collect();

    let labels = plan.output.labels.then(|| {
        plan.points
            .par_iter()
            .enumerate()
            .map(|(index, p)| PointLabel {
                index,
                coords: p.clone(),
                label: grid_row(sc, p, classify_tol(plan))
                    .ok()
                    .and_then(|r| r.label)
                    .map(|l| l.as_str().to_string()),
            })
            .collect()
    });

    let status = if outcomes.iter().any(|o| o.error.is_some()) {
        Status::EvaluationFailure
    } else if outcomes.iter().all(|o| o.pass) {
        Status::Pass
    } else {
        Status::CheckFailure
    };
    let checks = outcomes
        .iter()
        .map(|o| CheckReport {
            name: o.check.name().to_string(),
            tolerance: o.tol,
            samples: o.samples,
            skipped: o.skipped,
            max_abs_residual: o.max_abs,
            max_rel_residual: o.max_rel,
            pass: o.pass,
            error: o.error.as_ref().map(|e| e.to_string()),
        })
        .collect();
    let report = Report {
        schema_version: SCHEMA_VERSION,
        scenario: sc.label(),
        chart: sc.chart.clone(),
        sampling: plan.sampling.clone(),
        points: plan.points.len(),
        pass: status == Status::Pass,
        checks,
        labels,
    };
    Ok((report, status))
}

fn classify_tol(plan: &Plan) -> f64 {
    plan.checks
        .iter()
        .find(|c| c.0 == nullframe::checks::CheckKind::Classify)
        .map_or(DEFAULT_TOL, |c| c.1)
}

fn cell(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        // no "-0" in tables
        let v = if v == 0.0 { 0.0 } else { v };
        write!(out, "{v}").unwrap();
    }
}

/// CSV table plus the status; skipped points keep their coordinates, leave
/// the value columns empty and are flagged in the `skipped` column.
pub fn run_grid(plan: &Plan) -> Result<(String, Status), GeomError> {
    let sc = &plan.scenario;
    let tol = classify_tol(plan);
    let rows: Vec<_> = plan
        .points
        .par_iter()
        .map(|p| grid_row(sc, p, tol))
        .collect();

    let mut out = String::new();
    out.push_str(&sc.chart.join(","));
    out.push_str(",levi,kappa_re,kappa_im,sigma_re,sigma_im,twist,expansion");
    for n in 0..5 {
        write!(out, ",psi{n}_re,psi{n}_im").unwrap();
    }
    out.push_str(",petrov_label,skipped\n");

    let mut skipped = 0usize;
    let mut hard: Option<GeomError> = None;
    for (p, row) in plan.points.iter().zip(&rows) {
        let coords: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        out.push_str(&coords.join(","));
        match row {
            Ok(r) => {
                cell(&mut out, r.levi);
                let o = r.optical.as_ref();
                for v in [
                    o.map(|o| o.kappa.re),
                    o.map(|o| o.kappa.im),
                    o.map(|o| o.sigma.re),
                    o.map(|o| o.sigma.im),
                    o.map(|o| o.omega),
                    o.map(|o| o.theta_exp),
                ] {
                    cell(&mut out, v);
                }
                for n in 0..5 {
                    cell(&mut out, r.psi.map(|psi| psi[n].re));
                    cell(&mut out, r.psi.map(|psi| psi[n].im));
                }
                write!(out, ",{},0", r.label.map_or("", |l| l.as_str())).unwrap();
            }
            Err(e) => {
                if !e.is_singularity() && hard.is_none() {
                    hard = Some(e.clone());
                }
                skipped += 1;
                out.push_str(&",".repeat(18));
                out.push_str(",1");
            }
        }
        out.push('\n');
    }
    let status = if hard.is_some() {
        Status::EvaluationFailure
    } else if skipped as f64 > MAX_SKIPPED_FRACTION * plan.points.len() as f64 {
        Status::CheckFailure
    } else {
        Status::Pass
    };
    if let Some(e) = hard {
        eprintln!("evaluation failed: {e}");
    }
    if status == Status::CheckFailure {
        eprintln!("{skipped} of {} grid points skipped", plan.points.len());
    }
    Ok((out, status))
}
