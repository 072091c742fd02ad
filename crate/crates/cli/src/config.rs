//! Run configuration: JSON schema and its resolution into a runnable plan.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nullframe::catalog::{
    catalog_get, inline_scenario, InlineDefinition, InlineLift, ParamValue, Params, Scenario,
};
use nullframe::checks::{applicable, CheckKind};
use nullframe::lift::LiftShape;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub scenario: Option<ScenarioRef>,
    #[serde(default)]
    pub inline: Option<InlineConfig>,
    /// Check names; defaults to the scenario's expected-property list.
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    pub sampling: Sampling,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRef {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineConfig {
    pub chart: Vec<String>,
    pub lambda: Vec<String>,
    pub mu: Vec<String>,
    #[serde(default)]
    pub normalized: bool,
    #[serde(default)]
    pub lift: Option<LiftConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LiftConfig {
    Reduced {
        p: String,
        s: String,
        t: String,
        m: String,
        #[serde(default)]
        cosmological_constant: f64,
    },
    General {
        #[serde(rename = "P")]
        p: String,
        #[serde(rename = "W")]
        w: String,
        #[serde(rename = "H")]
        h: String,
        #[serde(default)]
        shape: Shape,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Uniform,
    Transverse,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Random,
    Grid,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub mode: Mode,
    /// Random mode: number of points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Grid mode: nodes per coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the scenario's sampling box; exclusions still apply.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<BoxConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// JSON report path; stdout when absent.
    #[serde(default)]
    pub report: Option<PathBuf>,
    /// CSV grid path; stdout when absent.
    #[serde(default)]
    pub grid: Option<PathBuf>,
    /// Adds per-point Petrov labels to the report.
    #[serde(default)]
    pub labels: bool,
}

/// Everything needed to run, validated.
pub struct Plan {
    pub scenario: Scenario,
    pub checks: Vec<(CheckKind, f64)>,
    pub points: Vec<Vec<f64>>,
    pub sampling: Sampling,
    pub output: Output,
}

/// A configuration problem; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
    serde_json::from_str(text)
        .map_err(|e| ConfigError(format!("{origin}:{}:{}: {e}", e.line(), e.column())))
}

/// Parses `name=value` tolerance overrides from the command line.
pub fn parse_tol_flag(s: &str) -> Result<(String, f64), ConfigError> {
    let Some((name, value)) = s.split_once('=') else {
        return err(format!("--tol expects name=value, got `{s}`"));
    };
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| ConfigError(format!("--tol {name}: `{value}` is not a number")))?;
    Ok((name.trim().to_string(), v))
}

fn check_tol(name: &str, v: f64) -> Result<CheckKind, ConfigError> {
    let kind =
        CheckKind::parse(name).ok_or_else(|| ConfigError(format!("unknown check `{name}`")))?;
    if !(v.is_finite() && v > 0.0) {
        return err(format!(
            "tolerance for `{name}` must be positive and finite, got {v}"
        ));
    }
    Ok(kind)
}

fn params_of(raw: &BTreeMap<String, serde_json::Value>) -> Result<Params, ConfigError> {
    raw.iter()
        .map(|(k, v)| {
            let pv = match v {
                serde_json::Value::Number(n) => ParamValue::Number(n.as_f64().unwrap_or(f64::NAN)),
                serde_json::Value::String(s) => ParamValue::Text(s.clone()),
                other => {
                    return err(format!(
                        "parameter `{k}`: expected number or string, got {other}"
                    ))
                }
            };
            Ok((k.clone(), pv))
        })
        .collect()
}

fn triple(v: &[String], what: &str) -> Result<[String; 3], ConfigError> {
    <[String; 3]>::try_from(v.to_vec())
        .map_err(|_| ConfigError(format!("inline.{what} needs 3 components")))
}

fn inline_definition(
    c: &InlineConfig,
    sampling: &Sampling,
) -> Result<InlineDefinition, ConfigError> {
    let Some(b) = &sampling.domain else {
        return err("inline definitions need sampling.domain");
    };
    let lift = c.lift.as_ref().map(|l| match l {
        LiftConfig::Reduced {
            p,
            s,
            t,
            m,
            cosmological_constant,
        } => InlineLift::Reduced {
            p: p.clone(),
            s: s.clone(),
            t: t.clone(),
            m: m.clone(),
            lambda: *cosmological_constant,
        },
        LiftConfig::General { p, w, h, shape } => InlineLift::General {
            p: p.clone(),
            w: w.clone(),
            h: h.clone(),
            shape: match shape {
                Shape::Uniform => LiftShape::Uniform,
                Shape::Transverse => LiftShape::Transverse,
            },
        },
    });
    Ok(InlineDefinition {
        chart: c.chart.clone(),
        lambda: triple(&c.lambda, "lambda")?,
        mu: triple(&c.mu, "mu")?,
        normalized: c.normalized,
        lift,
        lo: b.lo.clone(),
        hi: b.hi.clone(),
    })
}

/// Validates the configuration and builds the plan. Every expression is
/// parsed and every check name resolved before any point is evaluated.
pub fn resolve(cfg: RunConfig, tol_flags: &[(String, f64)]) -> Result<Plan, ConfigError> {
    if cfg.schema_version != SCHEMA_VERSION {
        return err(format!(
            "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
            cfg.schema_version
        ));
    }
    let mut scenario = match (&cfg.scenario, &cfg.inline) {
        (Some(s), None) => {
            catalog_get(&s.name, &params_of(&s.params)?).map_err(|e| ConfigError(e.to_string()))?
        }
        (None, Some(i)) => inline_scenario(&inline_definition(i, &cfg.sampling)?)
            .map_err(|e| ConfigError(format!("inline: {e}")))?,
        _ => return err("exactly one of `scenario` and `inline` is required"),
    };
    if let (Some(b), Some(_)) = (&cfg.sampling.domain, &cfg.scenario) {
        scenario.domain = scenario
            .domain
            .with_box(b.lo.clone(), b.hi.clone())
            .map_err(|e| ConfigError(format!("sampling.domain: {e}")))?;
    }

    let mut checks: Vec<(CheckKind, f64)> = match &cfg.checks {
        Some(names) => names
            .iter()
            .map(|n| {
                let kind = CheckKind::parse(n)
                    .ok_or_else(|| ConfigError(format!("unknown check `{n}`")))?;
                let tol = scenario
                    .expected
                    .iter()
                    .find(|e| e.check == kind)
                    .map_or(kind.default_tol(), |e| e.tol);
                Ok((kind, tol))
            })
            .collect::<Result<_, ConfigError>>()?,
        None if scenario.expected.is_empty() => {
            return err("`checks` is required for inline definitions");
        }
        None => scenario.expected.iter().map(|e| (e.check, e.tol)).collect(),
    };
    if checks.is_empty() {
        return err("`checks` is empty");
    }
    let overrides = cfg
        .tolerances
        .iter()
        .map(|(k, v)| (k.as_str(), *v))
        .chain(tol_flags.iter().map(|(k, v)| (k.as_str(), *v)));
    for (name, v) in overrides {
        let kind = check_tol(name, v)?;
        for c in checks.iter_mut().filter(|c| c.0 == kind) {
            c.1 = v;
        }
    }
    for &(c, _) in &checks {
        applicable(&scenario, c).map_err(|e| ConfigError(format!("{}: {e}", scenario.label())))?;
    }

    let points = match cfg.sampling.mode {
        Mode::Random => {
            if cfg.sampling.shape.is_some() {
                return err("sampling.shape only applies to grid mode");
            }
            let count = cfg
                .sampling
                .count
                .ok_or_else(|| ConfigError("random sampling needs `count`".into()))?;
            if count == 0 {
                return err("sampling.count must be positive");
            }
            scenario
                .domain
                .sample(count, cfg.sampling.seed)
                .map_err(|e| ConfigError(format!("sampling: {e}")))?
        }
        Mode::Grid => {
            if cfg.sampling.count.is_some() {
                return err("sampling.count only applies to random mode");
            }
            let shape = cfg
                .sampling
                .shape
                .as_ref()
                .ok_or_else(|| ConfigError("grid sampling needs `shape`".into()))?;
            scenario
                .domain
                .grid(shape)
                .map_err(|e| ConfigError(format!("sampling: {e}")))?
        }
    };
    Ok(Plan {
        scenario,
        checks,
        points,
        sampling: cfg.sampling,
        output: cfg.output,
    })
}
