//! The outer cut-accumulating iteration and its trace.
//!
//! Each step takes `y_n` from an [`OracleMap`], appends the cut
//! `H(x_n, y_n)` to the constraint system and sets `x_{n+1}` to the Bregman
//! projection of `x0` onto the new system. A run ends in exactly one
//! [`Outcome`].

use std::fmt;

use log::{debug, trace};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::Legendre;
use crate::point::Point;
use crate::projection::{
    project_cutset_warm, InfeasibilityReport, InnerSettings, Projection, ProjectionResult,
};
use crate::sets::{build_cut, default_tau_eq, Cut, CutSet, Halfspace};

/// Produces `y_n` from `x_n`.
pub trait OracleMap: Send + Sync {
    fn apply(&self, x: &Point) -> Result<Point>;

    /// Membership of `x` in the operator's domain; the whole space by default.
    fn in_domain(&self, _x: &Point) -> bool {
        true
    }
}

/// Adapts a closure into an [`OracleMap`] on the whole space.
pub struct FnOracle<F>(pub F);

impl<F> OracleMap for FnOracle<F>
where
    F: Fn(&Point) -> Result<Point> + Send + Sync,
{
    fn apply(&self, x: &Point) -> Result<Point> {
        (self.0)(x)
    }
}

impl<T: OracleMap + ?Sized> OracleMap for Box<T> {
    fn apply(&self, x: &Point) -> Result<Point> {
        (**self).apply(x)
    }

    fn in_domain(&self, x: &Point) -> bool {
        (**self).in_domain(x)
    }
}

impl<T: OracleMap + ?Sized> OracleMap for std::sync::Arc<T> {
    fn apply(&self, x: &Point) -> Result<Point> {
        (**self).apply(x)
    }

    fn in_domain(&self, x: &Point) -> bool {
        (**self).in_domain(x)
    }
}

#[derive(Debug, Clone)]
pub struct DriverConfig {
    pub x0: Point,
    pub c0: CutSet,
    /// Stop once `D(x_{n+1}, x_n) <= eps_step` ...
    pub eps_step: f64,
    /// ... and `||x_n - y_n|| <= eps_fix`.
    pub eps_fix: f64,
    pub max_iter: usize,
    /// `None` means `1e6 * (1 + ||x0||)`.
    pub divergence_radius: Option<f64>,
    /// `None` means [`default_tau_eq`] at each `x_n`.
    pub tau_eq: Option<f64>,
    pub inner: InnerSettings,
    /// Keep only scalar columns in the trace.
    pub slim: bool,
}

impl DriverConfig {
    pub fn new(x0: Point, c0: CutSet) -> Self {
        DriverConfig {
            x0,
            c0,
            eps_step: 1e-8,
            eps_fix: 1e-8,
            max_iter: 1000,
            divergence_radius: None,
            tau_eq: None,
            inner: InnerSettings::default(),
            slim: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps_step", self.eps_step), ("eps_fix", self.eps_fix)] {
            if !(v > 0.0) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter", "must be at least 1"));
        }
        if let Some(r) = self.divergence_radius {
            if !(r > 0.0) {
                return Err(Error::config("divergence_radius", "must be positive"));
            }
        }
        if let Some(t) = self.tau_eq {
            if !(t >= 0.0) {
                return Err(Error::config("tau_eq", "must be nonnegative"));
            }
        }
        self.c0.check_dim(self.x0.dim())?;
        self.inner.validate()
    }

    pub fn radius(&self) -> f64 {
        self.divergence_radius
            .unwrap_or_else(|| 1e6 * (1.0 + self.x0.norm()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Step,
    Converged,
    Diverging,
    Infeasible,
    #[serde(rename = "max-iter")]
    MaxIterations,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Step => "step",
            RowStatus::Converged => "converged",
            RowStatus::Diverging => "diverging",
            RowStatus::Infeasible => "infeasible",
            RowStatus::MaxIterations => "max-iter",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "step" => RowStatus::Step,
            "converged" => RowStatus::Converged,
            "diverging" => RowStatus::Diverging,
            "infeasible" => RowStatus::Infeasible,
            "max-iter" => RowStatus::MaxIterations,
            _ => return None,
        })
    }
}

/// One row per iterate `x_n`. Rows with status [`RowStatus::Step`] also
/// carry `y_n`, the cut and the step distance `D(x_{n+1}, x_n)`; the last
/// row records the terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub x: Option<Point>,
    pub y: Option<Point>,
    pub cut: Option<Cut>,
    /// `D(x_n, x0)`
    pub dist_to_x0: f64,
    /// `D(x_{n+1}, x_n)`
    pub step_distance: Option<f64>,
    /// Sum of step distances through this row.
    pub cumulative: f64,
    pub inner_sweeps: usize,
    pub status: RowStatus,
    /// The certified projection that produced `x_{n+1}`.
    pub projection: Option<ProjectionResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Converged {
        point: Point,
        fixed_point_residual: f64,
        step_distance: f64,
    },
    Diverging {
        norm_history: Vec<f64>,
    },
    Infeasible {
        step: usize,
        report: InfeasibilityReport,
    },
    MaxIterations {
        last: Point,
    },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Converged { .. } => "converged",
            Outcome::Diverging { .. } => "diverging",
            Outcome::Infeasible { .. } => "infeasible",
            Outcome::MaxIterations { .. } => "max-iter",
        }
    }

    /// Process exit code for the CLI: 0, 2, 3 or 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Converged { .. } => 0,
            Outcome::Diverging { .. } => 2,
            Outcome::Infeasible { .. } => 3,
            Outcome::MaxIterations { .. } => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub x0: Point,
    pub base: Vec<Halfspace>,
    pub tau_eq: Option<f64>,
    pub rows: Vec<TraceRow>,
    /// Running supremum of `D(x_n, x0)`.
    pub beta_estimate: f64,
    pub outcome: Outcome,
}

impl IterationTrace {
    /// Iterations performed, i.e. the number of cuts appended.
    pub fn iterations(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.y.is_some() || r.step_distance.is_some())
            .count()
    }

    pub fn total_step_distance(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cumulative)
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.rows.iter().filter_map(|r| r.x.as_ref())
    }

    /// `C_n` of the run: the base intersected with the first `n` cuts.
    pub fn cutset(&self, n: usize) -> CutSet {
        let mut cs = CutSet::from_halfspaces(self.base.clone());
        for row in self.rows.iter().take(n) {
            if let Some(cut) = &row.cut {
                cs.cuts.push(cut.clone());
            }
        }
        cs
    }
}

/// A driver run in progress. [`Run::step`] advances one iteration.
pub struct Run<'a> {
    f: &'a dyn Legendre,
    oracle: &'a dyn OracleMap,
    cfg: &'a DriverConfig,
    cs: CutSet,
    x: Point,
    n: usize,
    rows: Vec<TraceRow>,
    warm: Vec<f64>,
    cumulative: f64,
    beta: f64,
    norms: Vec<f64>,
    outcome: Option<Outcome>,
}

impl<'a> Run<'a> {
    pub fn new(
        f: &'a dyn Legendre,
        oracle: &'a dyn OracleMap,
        cfg: &'a DriverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(Run {
            f,
            oracle,
            cfg,
            cs: cfg.c0.clone(),
            x: cfg.x0.clone(),
            n: 0,
            rows: Vec::new(),
            warm: vec![0.0; cfg.c0.num_halfspaces()],
            cumulative: 0.0,
            beta: 0.0,
            norms: Vec::new(),
            outcome: None,
        })
    }

    pub fn current(&self) -> &Point {
        &self.x
    }

    pub fn iteration(&self) -> usize {
        self.n
    }

    pub fn cutset(&self) -> &CutSet {
        &self.cs
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    fn keep(&self, p: &Point) -> Option<Point> {
        (!self.cfg.slim).then(|| p.clone())
    }

    fn terminal_row(&mut self, x: Point, dist: f64, status: RowStatus) {
        self.rows.push(TraceRow {
            n: self.n,
            x: self.keep(&x),
            y: None,
            cut: None,
            dist_to_x0: dist,
            step_distance: None,
            cumulative: self.cumulative,
            inner_sweeps: 0,
            status,
            projection: None,
        });
    }

    /// Performs one iteration. Returns the outcome once the run has ended;
    /// further calls keep returning it.
    pub fn step(&mut self) -> Result<Option<&Outcome>> {
        if self.outcome.is_some() {
            return Ok(self.outcome.as_ref());
        }
        let f = self.f;
        let x0 = &self.cfg.x0;
        let x = self.x.clone();
        let dist = f.distance(&x, x0)?;
        self.beta = self.beta.max(dist);
        self.norms.push(x.norm());

        if x.norm() > self.cfg.radius() {
            debug!(
                "n = {}: ||x_n|| = {:e} exceeds the divergence radius",
                self.n,
                x.norm()
            );
            self.terminal_row(x, dist, RowStatus::Diverging);
            self.outcome = Some(Outcome::Diverging {
                norm_history: self.norms.clone(),
            });
            return Ok(self.outcome.as_ref());
        }
        if self.n >= self.cfg.max_iter {
            self.terminal_row(x.clone(), dist, RowStatus::MaxIterations);
            self.outcome = Some(Outcome::MaxIterations { last: x });
            return Ok(self.outcome.as_ref());
        }
        if !self.oracle.in_domain(&x) {
            return Err(Error::Domain(format!(
                "x_{} = {x:?} is outside the operator domain",
                self.n
            )));
        }
        let y = self.oracle.apply(&x)?;
        Error::check_dims(x.dim(), y.dim())?;
        if !y.is_finite() {
            return Err(Error::Domain(format!(
                "oracle returned a non-finite point at n = {}",
                self.n
            )));
        }
        let tau = self.cfg.tau_eq.unwrap_or_else(|| default_tau_eq(&x));
        let cut = build_cut(f, &x, &y, tau)?;
        if self.cs.push(cut.clone()) && matches!(cut, Cut::Half(_)) {
            self.warm.push(0.0);
        }
        let proj = project_cutset_warm(f, &self.cs, x0, &self.cfg.inner, Some(&self.warm))?;
        let res = match proj {
            Projection::Infeasible(report) => {
                debug!("n = {}: C_(n+1) is empty", self.n);
                self.rows.push(TraceRow {
                    n: self.n,
                    x: self.keep(&x),
                    y: self.keep(&y),
                    cut: Some(cut),
                    dist_to_x0: dist,
                    step_distance: None,
                    cumulative: self.cumulative,
                    inner_sweeps: report.inner_iterations,
                    status: RowStatus::Infeasible,
                    projection: None,
                });
                self.outcome = Some(Outcome::Infeasible {
                    step: self.n,
                    report,
                });
                return Ok(self.outcome.as_ref());
            }
            Projection::Solved(res) => res,
        };
        self.warm.clone_from(&res.multipliers);
        let next = res.point.clone();
        let step_dist = f.distance(&next, &x)?;
        self.cumulative += step_dist;
        let fix_residual = x.sub(&y).norm();
        trace!(
            "n = {}: D(x_n, x0) = {dist:e}, step = {step_dist:e}, ||x_n - y_n|| = {fix_residual:e}",
            self.n
        );
        self.rows.push(TraceRow {
            n: self.n,
            x: self.keep(&x),
            y: self.keep(&y),
            cut: (!self.cfg.slim).then_some(cut),
            dist_to_x0: dist,
            step_distance: Some(step_dist),
            cumulative: self.cumulative,
            inner_sweeps: res.inner_iterations,
            status: RowStatus::Step,
            projection: (!self.cfg.slim).then_some(res),
        });
        self.n += 1;
        self.x = next;

        if fix_residual <= self.cfg.eps_fix && step_dist <= self.cfg.eps_step {
            let point = self.x.clone();
            let d = f.distance(&point, x0)?;
            self.beta = self.beta.max(d);
            self.terminal_row(point.clone(), d, RowStatus::Converged);
            self.outcome = Some(Outcome::Converged {
                point,
                fixed_point_residual: fix_residual,
                step_distance: step_dist,
            });
        }
        Ok(self.outcome.as_ref())
    }

    /// Consumes the run. Panics if it has not ended.
    pub fn into_trace(self) -> IterationTrace {
        IterationTrace {
            x0: self.cfg.x0.clone(),
            base: self.cfg.c0.halfspaces().cloned().collect(),
            tau_eq: self.cfg.tau_eq,
            rows: self.rows,
            beta_estimate: self.beta,
            outcome: self.outcome.expect("run has not finished"),
        }
    }
}

/// Iterates until the run ends and returns its trace.
pub fn run(f: &dyn Legendre, oracle: &dyn OracleMap, cfg: &DriverConfig) -> Result<IterationTrace> {
    let mut r = Run::new(f, oracle, cfg)?;
    while r.step()?.is_none() {}
    Ok(r.into_trace())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `D(x_n, x0) < D(x_m, x0)`
    DistanceDecrease,
    /// `x_n` outside `C_m`
    Nesting,
    /// Partial sum of step distances above `D(x_{k+1}, x0)`.
    PrefixSum,
    /// `<grad f(x0) - grad f(x_m), x_n - x_m> > 0`
    VariationalInequality,
    /// `D(x_n, y_m) > D(x_n, x_m)`
    CutInequality,
    /// A stored column disagrees with its recomputed value.
    Bookkeeping,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::DistanceDecrease => "distance-decrease",
            ViolationKind::Nesting => "nesting",
            ViolationKind::PrefixSum => "prefix-sum",
            ViolationKind::VariationalInequality => "variational-inequality",
            ViolationKind::CutInequality => "cut-inequality",
            ViolationKind::Bookkeeping => "bookkeeping",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub m: Option<usize>,
    pub n: usize,
    /// How far past the tolerance the check failed.
    pub excess: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.m {
            Some(m) => write!(
                f,
                "{} at (m = {m}, n = {}): excess {:e}",
                self.kind, self.n, self.excess
            ),
            None => write!(
                f,
                "{} at n = {}: excess {:e}",
                self.kind, self.n, self.excess
            ),
        }
    }
}

/// Checks the monotonicity and nesting properties every trace of the
/// iteration satisfies, for all recorded `m < n`. Checks that need points
/// are skipped for slim traces.
pub fn verify_trace(f: &dyn Legendre, trace: &IterationTrace, tol: f64) -> Result<Vec<Violation>> {
    verify_rows(f, &trace.x0, &trace.base, trace.tau_eq, &trace.rows, tol)
}

/// [`verify_trace`] on bare rows, e.g. read back from a trace file.
pub fn verify_rows(
    f: &dyn Legendre,
    x0: &Point,
    base: &[Halfspace],
    tau_eq: Option<f64>,
    rows: &[TraceRow],
    tol: f64,
) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    let mut push = |kind, m, n, excess: f64| out.push(Violation { kind, m, n, excess });

    // Column bookkeeping.
    let mut running = 0.0;
    for (i, r) in rows.iter().enumerate() {
        if r.n != i {
            push(
                ViolationKind::Bookkeeping,
                None,
                i,
                (r.n as f64 - i as f64).abs(),
            );
        }
        running += r.step_distance.unwrap_or(0.0);
        let err = (r.cumulative - running).abs();
        if err > tol * (1.0 + running.abs()) {
            push(ViolationKind::Bookkeeping, None, i, err);
        }
    }

    let xs: Option<Vec<&Point>> = rows.iter().map(|r| r.x.as_ref()).collect();
    let Some(xs) = xs else {
        // Slim trace: only the scalar columns can be checked.
        let mut best = (0usize, f64::NEG_INFINITY);
        let mut sum = 0.0;
        for (n, r) in rows.iter().enumerate() {
            if r.dist_to_x0 < best.1 - tol {
                push(
                    ViolationKind::DistanceDecrease,
                    Some(best.0),
                    n,
                    best.1 - tol - r.dist_to_x0,
                );
            }
            if r.dist_to_x0 > best.1 {
                best = (n, r.dist_to_x0);
            }
            if n > 0 && sum > r.dist_to_x0 + tol {
                push(
                    ViolationKind::PrefixSum,
                    None,
                    n - 1,
                    sum - r.dist_to_x0 - tol,
                );
            }
            sum += r.step_distance.unwrap_or(0.0);
        }
        return Ok(out);
    };

    for (x, r) in xs.iter().zip(rows) {
        Error::check_dims(x0.dim(), x.dim())?;
        if let Some(y) = &r.y {
            Error::check_dims(x0.dim(), y.dim())?;
        }
    }
    let dists: Vec<f64> = xs
        .iter()
        .map(|x| f.distance(x, x0))
        .collect::<Result<_>>()?;
    let grads: Vec<Point> = xs.iter().map(|x| f.grad(x)).collect::<Result<_>>()?;
    let g0 = f.grad(x0)?;

    for (n, r) in rows.iter().enumerate() {
        let err = (r.dist_to_x0 - dists[n]).abs();
        if err > tol * (1.0 + dists[n]) {
            push(ViolationKind::Bookkeeping, None, n, err);
        }
        if let (Some(s), Some(next)) = (r.step_distance, xs.get(n + 1)) {
            let step = f.distance(next, xs[n])?;
            let err = (s - step).abs();
            if err > tol * (1.0 + step) {
                push(ViolationKind::Bookkeeping, None, n, err);
            }
        }
    }

    // Cuts, rebuilt from (x_m, y_m) when the row does not carry one.
    let mut cuts: Vec<Option<Cut>> = Vec::with_capacity(rows.len());
    for (m, r) in rows.iter().enumerate() {
        let cut = match (&r.cut, &r.y) {
            (Some(c), _) => Some(c.clone()),
            (None, Some(y)) => {
                let tau = tau_eq.unwrap_or_else(|| default_tau_eq(xs[m]));
                Some(build_cut(f, xs[m], y, tau)?)
            }
            (None, None) => None,
        };
        cuts.push(cut);
    }

    let mut sum = 0.0;
    let mut best = (0usize, f64::NEG_INFINITY);
    for n in 0..rows.len() {
        // (i) nondecreasing distances
        if dists[n] < best.1 - tol {
            push(
                ViolationKind::DistanceDecrease,
                Some(best.0),
                n,
                best.1 - tol - dists[n],
            );
        }
        if dists[n] > best.1 {
            best = (n, dists[n]);
        }
        // (iii) partial sums of step distances
        if n > 0 {
            sum += f.distance(xs[n], xs[n - 1])?;
            if sum > dists[n] + tol {
                push(ViolationKind::PrefixSum, None, n - 1, sum - dists[n] - tol);
            }
        }
        for m in 0..n {
            // (ii) x_n in C_m: base rows belong to C_0, cut k to C_(k+1).
            if m == 0 {
                let worst = base
                    .iter()
                    .map(|h| h.signed_distance(xs[n]))
                    .fold(f64::NEG_INFINITY, f64::max);
                if worst > tol {
                    push(ViolationKind::Nesting, Some(0), n, worst - tol);
                }
            } else if let Some(Cut::Half(h)) = &cuts[m - 1] {
                let sd = h.signed_distance(xs[n]);
                if sd > tol {
                    push(ViolationKind::Nesting, Some(m), n, sd - tol);
                }
            }
            // (iv)
            let v = g0.sub(&grads[m]).dot(&xs[n].sub(xs[m]));
            if v > tol {
                push(ViolationKind::VariationalInequality, Some(m), n, v - tol);
            }
            // (v)
            if let Some(y) = &rows[m].y {
                let lhs = f.distance(xs[n], y)?;
                let rhs = f.distance(xs[n], xs[m])?;
                if lhs > rhs + tol {
                    push(ViolationKind::CutInequality, Some(m), n, lhs - rhs - tol);
                }
            }
        }
    }
    Ok(out)
}
