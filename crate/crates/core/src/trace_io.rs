//! Trace files (CSV) and run summaries (JSON).
//!
//! The CSV header is `n,Dxn_x0,Dstep,cum,inner_sweeps,status`, followed by
//! `x_0..x_{d-1},y_0..y_{d-1}` unless the trace is slim. Floats are written
//! with 17 significant digits so that a re-check sees the same values;
//! missing values are empty fields.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::driver::{IterationTrace, Outcome, RowStatus, TraceRow};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::sets::Halfspace;

const SCALAR_COLUMNS: [&str; 6] = ["n", "Dxn_x0", "Dstep", "cum", "inner_sweeps", "status"];

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `trace` as CSV. Coordinate columns are included when the rows
/// carry points.
pub fn write_trace_csv<W: Write>(trace: &IterationTrace, out: W) -> Result<()> {
    let dim = trace.x0.dim();
    let with_points = trace.rows.iter().any(|r| r.x.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = SCALAR_COLUMNS.iter().map(|s| s.to_string()).collect();
    if with_points {
        header.extend((0..dim).map(|i| format!("x_{i}")));
        header.extend((0..dim).map(|i| format!("y_{i}")));
    }
    w.write_record(&header)?;
    for r in &trace.rows {
        let mut rec = vec![
            r.n.to_string(),
            fmt_float(r.dist_to_x0),
            r.step_distance.map(fmt_float).unwrap_or_default(),
            fmt_float(r.cumulative),
            r.inner_sweeps.to_string(),
            r.status.as_str().to_string(),
        ];
        if with_points {
            for p in [&r.x, &r.y] {
                match p {
                    Some(p) => rec.extend(p.iter().map(|&v| fmt_float(v))),
                    None => rec.extend(std::iter::repeat_n(String::new(), dim)),
                }
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows read back from a trace file, with the dimension implied by the
/// coordinate columns (`None` for slim traces).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub dim: Option<usize>,
    pub rows: Vec<TraceRow>,
}

fn parse_float(field: &str, line: usize, column: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    let v: f64 = field.parse().map_err(|_| {
        Error::Trace(format!(
            "line {line}, column {column}: `{field}` is not a number"
        ))
    })?;
    if !v.is_finite() {
        return Err(Error::Trace(format!(
            "line {line}, column {column}: non-finite value"
        )));
    }
    Ok(Some(v))
}

fn parse_point(fields: &[&str], line: usize, prefix: &str) -> Result<Option<Point>> {
    if fields.iter().all(|f| f.is_empty()) {
        return Ok(None);
    }
    let mut coords = Vec::with_capacity(fields.len());
    for (i, f) in fields.iter().enumerate() {
        let col = format!("{prefix}_{i}");
        coords.push(parse_float(f, line, &col)?.ok_or_else(|| {
            Error::Trace(format!(
                "line {line}: `{col}` is empty while other {prefix} columns are set"
            ))
        })?);
    }
    Point::new(coords).map(Some)
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<TraceTable> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.len() < SCALAR_COLUMNS.len() || header[..SCALAR_COLUMNS.len()] != SCALAR_COLUMNS {
        return Err(Error::Trace(format!(
            "header must start with {}",
            SCALAR_COLUMNS.join(",")
        )));
    }
    let extra = header.len() - SCALAR_COLUMNS.len();
    let dim = if extra == 0 {
        None
    } else {
        if !extra.is_multiple_of(2) {
            return Err(Error::Trace("unpaired coordinate columns".into()));
        }
        let d = extra / 2;
        for i in 0..d {
            let (xc, yc) = (&header[6 + i], &header[6 + d + i]);
            if *xc != format!("x_{i}") || *yc != format!("y_{i}") {
                return Err(Error::Trace(format!(
                    "unexpected coordinate column `{xc}` or `{yc}`"
                )));
            }
        }
        Some(d)
    };

    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != header.len() {
            return Err(Error::Trace(format!(
                "line {line}: {} fields, header has {}",
                rec.len(),
                header.len()
            )));
        }
        let f: Vec<&str> = rec.iter().map(str::trim).collect();
        let n = f[0]
            .parse()
            .map_err(|_| Error::Trace(format!("line {line}: `n` must be a nonnegative integer")))?;
        let dist_to_x0 = parse_float(f[1], line, "Dxn_x0")?
            .ok_or_else(|| Error::Trace(format!("line {line}: `Dxn_x0` is empty")))?;
        let step_distance = parse_float(f[2], line, "Dstep")?;
        let cumulative = parse_float(f[3], line, "cum")?
            .ok_or_else(|| Error::Trace(format!("line {line}: `cum` is empty")))?;
        let inner_sweeps = f[4].parse().map_err(|_| {
            Error::Trace(format!(
                "line {line}: `inner_sweeps` must be a nonnegative integer"
            ))
        })?;
        let status = RowStatus::parse(f[5])
            .ok_or_else(|| Error::Trace(format!("line {line}: unknown status `{}`", f[5])))?;
        let (x, y) = match dim {
            Some(d) => {
                let x = parse_point(&f[6..6 + d], line, "x")?;
                if x.is_none() {
                    return Err(Error::Trace(format!("line {line}: x columns are empty")));
                }
                (x, parse_point(&f[6 + d..6 + 2 * d], line, "y")?)
            }
            None => (None, None),
        };
        rows.push(TraceRow {
            n,
            x,
            y,
            cut: None,
            dist_to_x0,
            step_distance,
            cumulative,
            inner_sweeps,
            status,
            projection: None,
        });
    }
    Ok(TraceTable { dim, rows })
}

pub fn read_trace_file(path: &Path) -> Result<TraceTable> {
    read_trace_csv(std::fs::File::open(path)?)
}

/// The per-run summary written next to the trace. It also carries what
/// re-checking the trace needs: `x0`, the base rows and `tau_eq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub legendre: String,
    pub dim: usize,
    pub x0: Point,
    pub base: Vec<Halfspace>,
    pub tau_eq: Option<f64>,
    pub outcome: String,
    pub exit_code: i32,
    pub iterations: usize,
    pub final_point: Option<Point>,
    pub beta_estimate: f64,
    pub sum_step_distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasible_at: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point_residual: Option<f64>,
}

impl RunSummary {
    pub fn new(scenario: &str, legendre: &str, trace: &IterationTrace) -> Self {
        let (final_point, infeasible_at, fixed_point_residual) = match &trace.outcome {
            Outcome::Converged {
                point,
                fixed_point_residual,
                ..
            } => (Some(point.clone()), None, Some(*fixed_point_residual)),
            Outcome::MaxIterations { last } => (Some(last.clone()), None, None),
            Outcome::Infeasible { step, .. } => (None, Some(*step), None),
            Outcome::Diverging { .. } => (trace.points().last().cloned(), None, None),
        };
        RunSummary {
            scenario: scenario.to_string(),
            legendre: legendre.to_string(),
            dim: trace.x0.dim(),
            x0: trace.x0.clone(),
            base: trace.base.clone(),
            tau_eq: trace.tau_eq,
            outcome: trace.outcome.label().to_string(),
            exit_code: trace.outcome.exit_code(),
            iterations: trace.iterations(),
            final_point,
            beta_estimate: trace.beta_estimate,
            sum_step_distance: trace.total_step_distance(),
            infeasible_at,
            fixed_point_residual,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })
    }
}
