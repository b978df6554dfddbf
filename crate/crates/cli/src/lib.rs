//! The `bregman` command line: `run`, `check` and `project`.
//!
//! Exit codes: 0 converged or ok, 1 check found violations, 2 diverging,
//! 3 infeasible, 4 iteration cap reached, 64 usage error, 65 data error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use bregman_core::driver::verify_rows;
use bregman_core::trace_io::{read_trace_file, write_trace_csv};
use bregman_core::{
    legendre_by_name, project_cutset, run, Energy, Error, Halfspace, Legendre, Point, Projection,
    RunSummary, ScenarioConfig,
};
use clap::{Parser, Subcommand};
use log::{info, warn};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_DIVERGING: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_MAX_ITER: i32 = 4;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

#[derive(Debug, Parser)]
#[command(
    name = "bregman",
    version,
    about = "Bregman projections by cut accumulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its trace and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override `scenario.max_iter`.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        max_iter: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Re-verify a stored trace.
    Check {
        trace: PathBuf,
        /// Scenario the trace came from; defaults to `summary.json` beside the trace.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        quiet: bool,
    },
    /// Project `x0` onto the scenario's set once, without the outer loop.
    Project {
        #[arg(long)]
        config: PathBuf,
    },
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            out,
            max_iter,
            quiet,
        } => cmd_run(&config, &out, max_iter, quiet),
        Command::Check {
            trace,
            config,
            tol,
            quiet,
        } => cmd_check(&trace, config.as_deref(), tol, quiet),
        Command::Project { config } => cmd_project(&config),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        error_code(&e)
    })
}

fn load(config: &Path) -> Result<ScenarioConfig, Error> {
    ScenarioConfig::from_path(config).map_err(|e| match e {
        Error::Io(io) => Error::Config {
            path: config.display().to_string(),
            message: io.to_string(),
        },
        other => other,
    })
}

pub fn cmd_run(
    config: &Path,
    out: &Path,
    max_iter: Option<u64>,
    quiet: bool,
) -> Result<i32, Error> {
    let mut scenario = load(config)?;
    if let Some(m) = max_iter {
        scenario.scenario.max_iter =
            usize::try_from(m).map_err(|_| Error::Usage("--max-iter is too large".into()))?;
    }
    let f = scenario.legendre()?;
    let oracle = scenario.oracle(f.clone())?;
    let cfg = scenario.driver_config()?;
    info!(
        "running `{}` ({}, dim {})",
        scenario.scenario.name,
        f.name(),
        scenario.dim()
    );
    let trace = run(f.as_ref(), oracle.as_ref(), &cfg)?;

    fs::create_dir_all(out)?;
    let trace_path = out.join(&scenario.output.trace);
    write_trace_csv(&trace, fs::File::create(&trace_path)?)?;
    let summary = RunSummary::new(&scenario.scenario.name, f.name(), &trace);
    summary.write(&out.join(&scenario.output.summary))?;

    if !quiet {
        println!("scenario:   {}", summary.scenario);
        println!("outcome:    {}", summary.outcome);
        println!("iterations: {}", summary.iterations);
        if let Some(p) = &summary.final_point {
            println!("point:      {p:?}");
        }
        if let Some(n) = summary.infeasible_at {
            println!("empty set at step {n}");
        }
        println!("beta:       {:e}", summary.beta_estimate);
        println!("sum D:      {:e}", summary.sum_step_distance);
        println!("trace:      {}", trace_path.display());
    }
    Ok(trace.outcome.exit_code())
}

struct CheckContext {
    f: std::sync::Arc<dyn Legendre>,
    x0: Point,
    base: Vec<Halfspace>,
    tau_eq: Option<f64>,
}

fn check_context(trace: &Path, config: Option<&Path>) -> Result<Option<CheckContext>, Error> {
    if let Some(config) = config {
        let s = load(config)?;
        return Ok(Some(CheckContext {
            f: s.legendre()?,
            x0: s.scenario.x0.clone(),
            base: s.cutset()?.halfspaces().cloned().collect(),
            tau_eq: s.tolerances.tau_eq,
        }));
    }
    let summary_path = trace
        .parent()
        .unwrap_or(Path::new("."))
        .join("summary.json");
    if !summary_path.exists() {
        return Ok(None);
    }
    let s = RunSummary::read(&summary_path)?;
    let f = legendre_by_name(&s.legendre).ok_or_else(|| {
        Error::config(
            "legendre",
            format!("unknown Legendre function `{}`", s.legendre),
        )
    })?;
    Ok(Some(CheckContext {
        f,
        x0: s.x0,
        base: s.base,
        tau_eq: s.tau_eq,
    }))
}

pub fn cmd_check(trace: &Path, config: Option<&Path>, tol: f64, quiet: bool) -> Result<i32, Error> {
    if !(tol >= 0.0) {
        return Err(Error::Usage("--tol must be nonnegative".into()));
    }
    let mut table = read_trace_file(trace)?;
    if table.rows.is_empty() {
        warn!("{} has no rows; nothing to check", trace.display());
        eprintln!("warning: empty trace, nothing to check");
        return Ok(EXIT_OK);
    }
    let violations = match check_context(trace, config)? {
        Some(ctx) => {
            if let Some(d) = table.dim {
                Error::check_dims(ctx.x0.dim(), d)?;
            }
            verify_rows(
                ctx.f.as_ref(),
                &ctx.x0,
                &ctx.base,
                ctx.tau_eq,
                &table.rows,
                tol,
            )?
        }
        None => {
            eprintln!("warning: no summary.json beside the trace and no --config; checking scalar columns only");
            for r in &mut table.rows {
                r.x = None;
                r.y = None;
            }
            // Without points the Legendre function is never evaluated.
            let x0 = Point::zeros(table.dim.unwrap_or(1));
            verify_rows(&Energy, &x0, &[], None, &table.rows, tol)?
        }
    };
    for v in &violations {
        println!("{v}");
    }
    if !quiet {
        println!(
            "{} violations in {} rows",
            violations.len(),
            table.rows.len()
        );
    }
    Ok(if violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}

pub fn cmd_project(config: &Path) -> Result<i32, Error> {
    let s = load(config)?;
    let f = s.legendre()?;
    let cs = s.cutset()?;
    match project_cutset(f.as_ref(), &cs, &s.scenario.x0, &s.tolerances.inner)? {
        Projection::Solved(r) => {
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(EXIT_OK)
        }
        Projection::Infeasible(report) => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            eprintln!(
                "the set is empty (residual floor {:e})",
                report.residual_floor
            );
            Ok(EXIT_INFEASIBLE)
        }
    }
}
