//! `nullframe` command-line runner.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
//! 3 evaluation failure.

mod config;
mod run;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nullframe::catalog::catalog_list;
use nullframe::checks::CheckKind;

use crate::config::{parse_config, parse_tol_flag, resolve, ConfigError, Mode, Plan};
use crate::run::{run_check, run_grid, Status};

#[derive(Parser)]
#[command(
    name = "nullframe",
    version,
    about = "Residual checks for lifted CR structures"
)]
struct Cli {
    /// Tolerance override, `name=value`; may be repeated
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in scenarios
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Run the configured checks and write a JSON report
    Check { config: PathBuf },
    /// Evaluate pointwise diagnostics on a grid and write CSV
    Grid { config: PathBuf },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// List scenario names, parameters and check names
    List,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_EVAL: u8 = 3;

fn catalog_text() -> String {
    let mut out = String::new();
    for e in catalog_list() {
        let params: Vec<String> = e
            .params
            .iter()
            .map(|p| format!("{}: {} ({})", p.key, p.kind, p.range))
            .collect();
        out.push_str(&format!("{}\n  {}\n", e.name, e.summary));
        if !params.is_empty() {
            out.push_str(&format!("  params: {}\n", params.join("; ")));
        }
    }
    out.push_str("\nchecks:\n");
    for c in CheckKind::ALL {
        out.push_str(&format!(
            "  {:<24} tol {:<8e} {}\n",
            c.name(),
            c.default_tol(),
            c.describe()
        ));
    }
    out
}

fn load(path: &Path, tol: &[String]) -> Result<Plan, ConfigError> {
    let text =
        fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text, &path.display().to_string())?;
    let flags = tol
        .iter()
        .map(|t| parse_tol_flag(t))
        .collect::<Result<Vec<_>, _>>()?;
    resolve(cfg, &flags)
}

fn emit(target: Option<&Path>, text: &str) -> Result<(), String> {
    match target {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            match stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
            {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(format!("stdout: {e}")),
                _ => Ok(()),
            }
        }
    }
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, ConfigError> {
    let Ok(raw) = std::env::var("NULLFRAME_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        ConfigError(format!(
            "NULLFRAME_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| ConfigError(format!("thread pool: {e}")))
}

fn execute(command: &Command, tol: &[String]) -> Result<u8, (u8, String)> {
    let config_err = |e: ConfigError| (EXIT_CONFIG, e.0);
    let (path, grid) = match command {
        Command::Catalog {
            action: CatalogAction::List,
        } => {
            emit(None, &catalog_text()).map_err(|e| (EXIT_EVAL, e))?;
            return Ok(0);
        }
        Command::Check { config } => (config, false),
        Command::Grid { config } => (config, true),
    };
    let plan = load(path, tol).map_err(config_err)?;
    if grid && plan.sampling.mode != Mode::Grid {
        return Err((EXIT_CONFIG, "`grid` needs sampling.mode = \"grid\"".into()));
    }
    let pool = thread_pool().map_err(config_err)?;
    let work = || -> Result<u8, (u8, String)> {
        let eval_err = |e: nullframe::GeomError| (EXIT_EVAL, e.to_string());
        let write_err = |e: String| (EXIT_EVAL, e);
        let status = if grid {
            let (csv, status) = run_grid(&plan).map_err(eval_err)?;
            emit(plan.output.grid.as_deref(), &csv).map_err(write_err)?;
            status
        } else {
            let (report, status) = run_check(&plan).map_err(eval_err)?;
            let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
            json.push('\n');
            emit(plan.output.report.as_deref(), &json).map_err(write_err)?;
            status
        };
        if status != Status::Pass {
            eprintln!("{}: {status:?}", plan.scenario.label());
        }
        Ok(status.exit_code())
    };
    match pool {
        Some(p) => p.install(work),
        None => work(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli.command, &cli.tol) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
