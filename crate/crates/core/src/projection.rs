//! Bregman projections onto halfspaces and polyhedra, with KKT certificates.
//!
//! The projection of `x0` onto `C = {z : <a_i, z> <= b_i}` is the minimizer
//! of `D(z, x0)` over `C`. It is characterized by multipliers `lambda >= 0`
//! with
//!
//! ```text
//!     grad f(z) = grad f(x0) - sum_i lambda_i a_i,   z in C,   lambda_i (<a_i, z> - b_i) = 0.
//! ```
//!
//! Two solvers are provided. The default is a primal-dual interior-point
//! method on the row-normalized system; it is insensitive to the long runs
//! of nearly parallel cuts that the outer iteration produces. The second is
//! cyclic dual coordinate ascent (Hildreth's method in the Bregman
//! geometry), where each coordinate step is a single-halfspace projection.
//! Both return the same certificate, and both report infeasibility through a
//! Farkas-type ray check on the multipliers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::Legendre;
use crate::linalg::cholesky_solve;
use crate::multiplier;
use crate::point::Point;
use crate::sets::{CutSet, Halfspace};

/// The interior-point solver aims this much below the configured tolerances.
const IPM_TARGET_FACTOR: f64 = 1e-3;

/// Complementarity target, relative to `comp_tol`. Leftover slack leaves
/// the point strictly inside the active cuts, and near a curved fixed-point
/// set that error grows like its square root.
const IPM_SLACK_FACTOR: f64 = 1e-7;

/// A step length below this, after a certified iterate, ends the solve.
const IPM_STALL_STEP: f64 = 1e-10;

/// Iterations allowed past the first certified iterate.
const IPM_POLISH_ITERS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerMethod {
    #[default]
    InteriorPoint,
    CoordinateAscent,
}

/// Inner-solver settings. Tolerances are absolute and multiplied by
/// `1 + ||x0||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerSettings {
    pub method: InnerMethod,
    /// Sweeps (coordinate ascent) or Newton iterations (interior point).
    pub max_sweeps: usize,
    pub kkt_tol: f64,
    pub feas_tol: f64,
    pub comp_tol: f64,
    /// Multiplier norm beyond which persistent violation is read as infeasibility.
    pub lambda_cap: f64,
    /// Consecutive violated sweeps required by the infeasibility heuristics.
    pub stall_window: usize,
    /// Radius of the ball certified empty by the Farkas ray test;
    /// `None` means `1e6 * (1 + ||x0||)`.
    pub infeasibility_radius: Option<f64>,
}

impl Default for InnerSettings {
    fn default() -> Self {
        InnerSettings {
            method: InnerMethod::InteriorPoint,
            max_sweeps: 20_000,
            kkt_tol: 1e-9,
            feas_tol: 1e-9,
            comp_tol: 1e-9,
            lambda_cap: 1e8,
            stall_window: 50,
            infeasibility_radius: None,
        }
    }
}

impl InnerSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kkt_tol", self.kkt_tol),
            ("feas_tol", self.feas_tol),
            ("comp_tol", self.comp_tol),
            ("lambda_cap", self.lambda_cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be positive and finite"));
            }
        }
        if self.max_sweeps == 0 {
            return Err(Error::config("max_sweeps", "must be at least 1"));
        }
        if self.stall_window == 0 {
            return Err(Error::config("stall_window", "must be at least 1"));
        }
        if let Some(r) = self.infeasibility_radius {
            if !(r > 0.0) {
                return Err(Error::config("infeasibility_radius", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub point: Point,
    /// One per halfspace of the set, in [`CutSet::halfspaces`] order.
    pub multipliers: Vec<f64>,
    /// `||grad f(z) - grad f(x0) + sum_i lambda_i a_i||`
    pub stationarity_residual: f64,
    /// `max_i max(0, (<a_i, z> - b_i) / ||a_i||)`
    pub max_violation: f64,
    /// `max_i lambda_i |<a_i, z> - b_i|`
    pub complementarity_residual: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    /// Nonnegative row weights `w` with `sum_i w_i ||a_i|| = 1`.
    pub witness_multipliers: Vec<f64>,
    /// Every point within the infeasibility radius violates some
    /// normalized constraint by at least this much (when positive).
    pub residual_floor: f64,
    pub diverged_multiplier_norm: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Solved(ProjectionResult),
    Infeasible(InfeasibilityReport),
}

impl Projection {
    pub fn solved(self) -> Option<ProjectionResult> {
        match self {
            Projection::Solved(r) => Some(r),
            Projection::Infeasible(_) => None,
        }
    }
}

/// Bregman projection onto one halfspace. Returns `x` itself when feasible.
pub fn project_halfspace(f: &dyn Legendre, hs: &Halfspace, x: &Point, tol: f64) -> Result<Point> {
    project_halfspace_with_multiplier(f, hs, x, tol).map(|(p, _)| p)
}

/// As [`project_halfspace`], also returning the multiplier `lambda*`.
pub fn project_halfspace_with_multiplier(
    f: &dyn Legendre,
    hs: &Halfspace,
    x: &Point,
    tol: f64,
) -> Result<(Point, f64)> {
    Error::check_dims(hs.dim(), x.dim())?;
    if hs.slack(x) <= 0.0 {
        return Ok((x.clone(), 0.0));
    }
    let w = f.grad(x)?;
    let lambda = multiplier::solve(f, &w, &hs.a, hs.b, 0.0)?;
    let mut p = f.conj_grad(&w.axpy(-lambda, &hs.a))?;
    if lambda > 0.0 {
        p = polish_onto_boundary(f, hs, p)?;
    }
    let miss = hs.slack(&p).abs();
    if miss > tol * (1.0 + hs.b.abs()) {
        return Err(Error::Degenerate(format!(
            "halfspace projection misses the boundary by {miss:e}"
        )));
    }
    Ok((p, lambda))
}

/// When `w - lambda a` nearly cancels, `conj_grad` loses digits and the
/// point drifts off the boundary. Newton steps along `H(p)^-1 a`, the
/// tangent of the multiplier curve, move it back.
fn polish_onto_boundary(f: &dyn Legendre, hs: &Halfspace, mut p: Point) -> Result<Point> {
    for _ in 0..2 {
        let r = hs.slack(&p);
        if r.abs() <= f64::EPSILON * (1.0 + hs.b.abs()) {
            break;
        }
        let mut dir = hs.a.coords().to_vec();
        if cholesky_solve(&f.hessian(&p)?, &mut dir).is_err() {
            break;
        }
        let dir = Point::from_raw(dir);
        let rate = hs.a.dot(&dir);
        if !(rate > 0.0) {
            break;
        }
        let next = p.axpy(-r / rate, &dir);
        if !next.is_finite() || f.grad(&next).is_err() {
            break;
        }
        p = next;
    }
    Ok(p)
}

/// Computes the three certificate residuals of a candidate projection.
pub fn kkt_residuals(
    f: &dyn Legendre,
    cs: &CutSet,
    x0: &Point,
    point: &Point,
    multipliers: &[f64],
) -> Result<(f64, f64, f64)> {
    let rows: Vec<&Halfspace> = cs.halfspaces().collect();
    if rows.len() != multipliers.len() {
        return Err(Error::Usage(format!(
            "{} multipliers for {} halfspaces",
            multipliers.len(),
            rows.len()
        )));
    }
    let mut station = f.grad(point)?.sub(&f.grad(x0)?);
    let mut viol = 0.0_f64;
    let mut comp = 0.0_f64;
    for (h, &l) in rows.iter().zip(multipliers) {
        station = station.axpy(l, &h.a);
        let slack = h.slack(point);
        viol = viol.max(slack / h.a.norm());
        comp = comp.max(l * slack.abs());
    }
    Ok((station.norm(), viol, comp))
}

/// Projects `x0` onto `cs` from a cold start.
pub fn project_cutset(
    f: &dyn Legendre,
    cs: &CutSet,
    x0: &Point,
    settings: &InnerSettings,
) -> Result<Projection> {
    project_cutset_warm(f, cs, x0, settings, None)
}

/// Projects `x0` onto `cs`. `warm` seeds the multipliers of the coordinate
/// ascent solver; missing trailing entries start at zero.
pub fn project_cutset_warm(
    f: &dyn Legendre,
    cs: &CutSet,
    x0: &Point,
    settings: &InnerSettings,
    warm: Option<&[f64]>,
) -> Result<Projection> {
    settings.validate()?;
    cs.check_dim(x0.dim())?;
    let rows: Vec<&Halfspace> = cs.halfspaces().collect();
    if rows.is_empty() {
        return Ok(Projection::Solved(ProjectionResult {
            point: x0.clone(),
            multipliers: Vec::new(),
            stationarity_residual: 0.0,
            max_violation: 0.0,
            complementarity_residual: 0.0,
            inner_iterations: 0,
        }));
    }
    let problem = Problem::new(f, &rows, x0, settings)?;
    match settings.method {
        InnerMethod::InteriorPoint => problem.interior_point(),
        InnerMethod::CoordinateAscent => problem.coordinate_ascent(warm),
    }
}

/// `D(c, x) - D(c, xhat) - D(xhat, x)`; nonnegative for a correct
/// projection `xhat` of `x` and any feasible `c`.
pub fn three_point_residual(f: &dyn Legendre, c: &Point, x: &Point, xhat: &Point) -> Result<f64> {
    Ok(f.distance(c, x)? - f.distance(c, xhat)? - f.distance(xhat, x)?)
}

/// `max_c <grad f(x0) - grad f(xhat), c - xhat>` over feasible probes;
/// nonpositive for a correct projection.
pub fn variational_residual(
    f: &dyn Legendre,
    cs: &CutSet,
    x0: &Point,
    xhat: &Point,
    probes: &[Point],
    feas_tol: f64,
) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::Usage(
            "variational_residual needs at least one probe".into(),
        ));
    }
    let dir = f.grad(x0)?.sub(&f.grad(xhat)?);
    let mut worst = f64::NEG_INFINITY;
    for (i, c) in probes.iter().enumerate() {
        Error::check_dims(xhat.dim(), c.dim())?;
        if !cs.contains(c, feas_tol) {
            return Err(Error::Usage(format!("probe {i} is not in the set")));
        }
        worst = worst.max(dir.dot(&c.sub(xhat)));
    }
    Ok(worst)
}

struct Problem<'a> {
    f: &'a dyn Legendre,
    rows: Vec<&'a Halfspace>,
    /// Row norms `||a_i||`.
    norms: Vec<f64>,
    /// Normalized rows `a_i / ||a_i||`, `b_i / ||a_i||`.
    unit_a: Vec<Point>,
    unit_b: Vec<f64>,
    x0: &'a Point,
    g0: Point,
    settings: &'a InnerSettings,
    scale: f64,
    radius: f64,
}

struct Residuals {
    stationarity: f64,
    violation: f64,
    complementarity: f64,
}

impl Residuals {
    fn within(&self, s: &InnerSettings, scale: f64, factor: f64) -> bool {
        self.stationarity <= factor * s.kkt_tol * scale
            && self.violation <= factor * s.feas_tol * scale
            && self.complementarity <= factor * s.comp_tol * scale
    }

    /// Worst residual relative to its tolerance.
    fn merit(&self, s: &InnerSettings, scale: f64) -> f64 {
        let rel = |v: f64, tol: f64| v / (tol * scale).max(f64::MIN_POSITIVE);
        rel(self.stationarity, s.kkt_tol)
            .max(rel(self.violation.max(0.0), s.feas_tol))
            .max(rel(self.complementarity, s.comp_tol))
    }
}

impl<'a> Problem<'a> {
    fn new(
        f: &'a dyn Legendre,
        rows: &[&'a Halfspace],
        x0: &'a Point,
        settings: &'a InnerSettings,
    ) -> Result<Self> {
        let norms: Vec<f64> = rows.iter().map(|h| h.a.norm()).collect();
        let unit_a = rows
            .iter()
            .zip(&norms)
            .map(|(h, n)| h.a.scale(1.0 / n))
            .collect();
        let unit_b = rows.iter().zip(&norms).map(|(h, n)| h.b / n).collect();
        let scale = 1.0 + x0.norm();
        Ok(Problem {
            f,
            rows: rows.to_vec(),
            norms,
            unit_a,
            unit_b,
            x0,
            g0: f.grad(x0)?,
            settings,
            scale,
            radius: settings.infeasibility_radius.unwrap_or(1e6 * scale),
        })
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    /// Residuals for multipliers on the normalized rows.
    fn residuals(&self, z: &Point, unit_lambda: &[f64]) -> Result<Residuals> {
        let mut station = self.f.grad(z)?.sub(&self.g0);
        let mut violation = 0.0_f64;
        let mut complementarity = 0.0_f64;
        for i in 0..self.m() {
            station = station.axpy(unit_lambda[i], &self.unit_a[i]);
            let slack = self.unit_a[i].dot(z) - self.unit_b[i];
            violation = violation.max(slack);
            complementarity = complementarity.max(unit_lambda[i] * slack.abs());
        }
        Ok(Residuals {
            stationarity: station.norm(),
            violation,
            complementarity,
        })
    }

    fn solved(&self, z: Point, unit_lambda: &[f64], iterations: usize) -> Result<Projection> {
        let multipliers: Vec<f64> = unit_lambda
            .iter()
            .zip(&self.norms)
            .map(|(l, n)| l.max(0.0) / n)
            .collect();
        let owned = CutSet::from_halfspaces(self.rows.iter().map(|h| (*h).clone()).collect());
        let (st, viol, comp) = kkt_residuals(self.f, &owned, self.x0, &z, &multipliers)?;
        Ok(Projection::Solved(ProjectionResult {
            point: z,
            multipliers,
            stationarity_residual: st,
            max_violation: viol,
            complementarity_residual: comp,
            inner_iterations: iterations,
        }))
    }

    /// Farkas ray test on nonnegative weights for the normalized rows.
    fn farkas(
        &self,
        weights: &[f64],
        lambda_norm: f64,
        iterations: usize,
    ) -> Option<InfeasibilityReport> {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        if !(total > 0.0 && total.is_finite()) {
            return None;
        }
        let d: Vec<f64> = weights.iter().map(|w| w.max(0.0) / total).collect();
        let mut combo = Point::zeros(self.x0.dim());
        let mut gap = 0.0;
        for i in 0..self.m() {
            combo = combo.axpy(d[i], &self.unit_a[i]);
            gap -= d[i] * self.unit_b[i];
        }
        let floor = gap - combo.norm() * self.radius;
        (floor > self.settings.feas_tol * self.scale).then(|| InfeasibilityReport {
            witness_multipliers: d.iter().zip(&self.norms).map(|(w, n)| w / n).collect(),
            residual_floor: floor,
            diverged_multiplier_norm: lambda_norm,
            inner_iterations: iterations,
        })
    }

    fn lambda_cap_report(
        &self,
        unit_lambda: &[f64],
        violation: f64,
        iterations: usize,
    ) -> InfeasibilityReport {
        let total: f64 = unit_lambda.iter().sum();
        InfeasibilityReport {
            witness_multipliers: unit_lambda
                .iter()
                .zip(&self.norms)
                .map(|(l, n)| l / (total * n))
                .collect(),
            residual_floor: violation,
            diverged_multiplier_norm: norm(unit_lambda),
            inner_iterations: iterations,
        }
    }

    fn interior_point(&self) -> Result<Projection> {
        let m = self.m();
        let d = self.x0.dim();
        let mut z = self.x0.clone();
        let mut s: Vec<f64> = (0..m)
            .map(|i| (self.unit_b[i] - self.unit_a[i].dot(&z)).max(1.0))
            .collect();
        let mut lambda = vec![1.0; m];
        let mut best: Option<(Point, Vec<f64>, f64)> = None;
        let mut certified_at = None;
        let mut stalled = 0usize;

        let mut iterations = self.settings.max_sweeps;
        for it in 0..self.settings.max_sweeps {
            iterations = it;
            let res = self.residuals(&z, &lambda)?;
            if res.within(self.settings, self.scale, IPM_TARGET_FACTOR)
                && res.complementarity <= IPM_SLACK_FACTOR * self.settings.comp_tol * self.scale
            {
                return self.solved(z, &lambda, it);
            }
            if res.within(self.settings, self.scale, 1.0) {
                let merit = res.merit(self.settings, self.scale);
                if best.as_ref().is_none_or(|b| merit <= b.2) {
                    best = Some((z.clone(), lambda.clone(), merit));
                }
                let first = *certified_at.get_or_insert(it);
                if it - first >= IPM_POLISH_ITERS {
                    break;
                }
            }
            if let Some(report) = self.farkas(&lambda, norm(&lambda), it) {
                return Ok(Projection::Infeasible(report));
            }
            stalled = if res.violation > self.settings.feas_tol * self.scale {
                stalled + 1
            } else {
                0
            };
            if stalled >= self.settings.stall_window && norm(&lambda) > self.settings.lambda_cap {
                return Ok(Projection::Infeasible(self.lambda_cap_report(
                    &lambda,
                    res.violation,
                    it,
                )));
            }

            let gz = self.f.grad(&z)?;
            let mut r_d = gz.sub(&self.g0);
            for i in 0..m {
                r_d = r_d.axpy(lambda[i], &self.unit_a[i]);
            }
            let r_p: Vec<f64> = (0..m)
                .map(|i| self.unit_a[i].dot(&z) + s[i] - self.unit_b[i])
                .collect();
            let mu = dot(&s, &lambda) / m as f64;

            let mut mat = self.f.hessian(&z)?;
            for i in 0..m {
                let w = lambda[i] / s[i];
                let a = &self.unit_a[i];
                for r in 0..d {
                    for c in 0..d {
                        mat[r * d + c] += w * a[r] * a[c];
                    }
                }
            }
            let newton = |t: &[f64]| -> Result<(Point, Vec<f64>, Vec<f64>)> {
                let mut rhs: Vec<f64> = r_d.iter().map(|v| -v).collect();
                for i in 0..m {
                    let coef = (t[i] + lambda[i] * r_p[i]) / s[i];
                    for (r, v) in rhs.iter_mut().enumerate() {
                        *v -= coef * self.unit_a[i][r];
                    }
                }
                cholesky_solve(&mat, &mut rhs)?;
                let dz = Point::from_raw(rhs);
                let ds: Vec<f64> = (0..m).map(|i| -r_p[i] - self.unit_a[i].dot(&dz)).collect();
                let dl: Vec<f64> = (0..m).map(|i| (t[i] - lambda[i] * ds[i]) / s[i]).collect();
                Ok((dz, ds, dl))
            };

            // Mehrotra predictor-corrector.
            // Past a certified iterate, a breakdown of the Newton system only
            // means the tighter target is out of reach.
            let t_aff: Vec<f64> = (0..m).map(|i| -lambda[i] * s[i]).collect();
            let (_, ds_aff, dl_aff) = match newton(&t_aff) {
                Err(Error::Degenerate(_)) if best.is_some() => break,
                other => other?,
            };
            let alpha_aff = boundary_step(&s, &ds_aff).min(boundary_step(&lambda, &dl_aff));
            let mu_aff = (0..m)
                .map(|i| (s[i] + alpha_aff * ds_aff[i]) * (lambda[i] + alpha_aff * dl_aff[i]))
                .sum::<f64>()
                / m as f64;
            let sigma = if mu > 0.0 {
                (mu_aff / mu).clamp(0.0, 1.0).powi(3)
            } else {
                0.0
            };
            let t: Vec<f64> = (0..m)
                .map(|i| -lambda[i] * s[i] - ds_aff[i] * dl_aff[i] + sigma * mu)
                .collect();
            let (dz, ds, dl) = match newton(&t) {
                Err(Error::Degenerate(_)) if best.is_some() => break,
                other => other?,
            };
            let mut alpha =
                (0.995 * boundary_step(&s, &ds).min(boundary_step(&lambda, &dl))).min(1.0);
            if alpha < IPM_STALL_STEP && best.is_some() {
                break;
            }

            // Keep z where f is finite.
            let mut z_new = z.axpy(alpha, &dz);
            while self.f.grad(&z_new).is_err() {
                alpha *= 0.5;
                if alpha < 1e-16 {
                    return Err(Error::Domain(
                        "interior-point step cannot stay in dom f".into(),
                    ));
                }
                z_new = z.axpy(alpha, &dz);
            }
            z = z_new;
            for i in 0..m {
                s[i] = (s[i] + alpha * ds[i]).max(f64::MIN_POSITIVE);
                lambda[i] = (lambda[i] + alpha * dl[i]).max(f64::MIN_POSITIVE);
            }
        }
        if let Some((z, lambda, _)) = best {
            return self.solved(z, &lambda, iterations);
        }
        let res = self.residuals(&z, &lambda)?;
        Err(Error::NonConvergence {
            sweeps: self.settings.max_sweeps,
            stationarity: res.stationarity,
            max_violation: res.violation,
            complementarity: res.complementarity,
        })
    }

    fn coordinate_ascent(&self, warm: Option<&[f64]>) -> Result<Projection> {
        let m = self.m();
        let mut lambda = vec![0.0; m];
        if let Some(w) = warm {
            for (l, v) in lambda.iter_mut().zip(w) {
                *l = v.max(0.0);
            }
        }
        let mut u = self.dual_point(&lambda);
        if !self.f.in_conj_domain(&u) {
            lambda.iter_mut().for_each(|l| *l = 0.0);
            u = self.g0.clone();
        }
        let mut stalled = 0usize;
        let mut snapshot: Option<Vec<f64>> = None;
        let mut last = None;

        for sweep in 1..=self.settings.max_sweeps {
            for (i, h) in self.rows.iter().enumerate() {
                let w = u.axpy(lambda[i], &h.a);
                let mu = multiplier::solve(self.f, &w, &h.a, h.b, lambda[i])?;
                u = w.axpy(-mu, &h.a);
                lambda[i] = mu;
            }
            let fresh = self.dual_point(&lambda);
            if self.f.in_conj_domain(&fresh) {
                u = fresh;
            }
            let z = self.f.conj_grad(&u)?;
            let unit: Vec<f64> = lambda.iter().zip(&self.norms).map(|(l, n)| l * n).collect();
            let res = self.residuals(&z, &unit)?;
            if res.within(self.settings, self.scale, 1.0) {
                return self.solved(z, &unit, sweep);
            }

            if res.violation > self.settings.feas_tol * self.scale {
                stalled += 1;
            } else {
                stalled = 0;
                snapshot = None;
            }
            if stalled == 1 {
                snapshot = Some(unit.clone());
            } else if stalled > 0 && stalled.is_multiple_of(self.settings.stall_window) {
                if let Some(prev) = snapshot.replace(unit.clone()) {
                    let drift: Vec<f64> = unit.iter().zip(&prev).map(|(a, b)| a - b).collect();
                    if let Some(report) = self.farkas(&drift, norm(&unit), sweep) {
                        return Ok(Projection::Infeasible(report));
                    }
                }
                if norm(&unit) > self.settings.lambda_cap {
                    return Ok(Projection::Infeasible(self.lambda_cap_report(
                        &unit,
                        res.violation,
                        sweep,
                    )));
                }
            }
            last = Some(res);
        }
        let res = last.expect("at least one sweep");
        Err(Error::NonConvergence {
            sweeps: self.settings.max_sweeps,
            stationarity: res.stationarity,
            max_violation: res.violation,
            complementarity: res.complementarity,
        })
    }

    /// `grad f(x0) - sum_i lambda_i a_i` for multipliers on the original rows.
    fn dual_point(&self, lambda: &[f64]) -> Point {
        self.rows
            .iter()
            .zip(lambda)
            .fold(self.g0.clone(), |u, (h, l)| u.axpy(-l, &h.a))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Largest `alpha <= 1` keeping `v + alpha * dv >= 0`.
fn boundary_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::{Energy, ExpSum};
    use crate::pt;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    fn hs(a: Point, b: f64) -> Halfspace {
        Halfspace::new(a, b).unwrap()
    }

    fn both_methods() -> [InnerSettings; 2] {
        [
            InnerSettings::default(),
            InnerSettings {
                method: InnerMethod::CoordinateAscent,
                ..InnerSettings::default()
            },
        ]
    }

    #[test]
    fn halfspace_examples() {
        let (p, l) =
            project_halfspace_with_multiplier(&Energy, &hs(pt![1, 0], 0.0), &pt![2, 3], 1e-12)
                .unwrap();
        assert_eq!(p, pt![0, 3]);
        assert_eq!(l, 2.0);

        let (p, l) =
            project_halfspace_with_multiplier(&ExpSum, &hs(pt![1], 0.0), &pt![1], 1e-12).unwrap();
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l, E - 1.0, epsilon = 1e-14);

        let p = project_halfspace(&Energy, &hs(pt![1, 0], 5.0), &pt![2, 3], 1e-12).unwrap();
        assert_eq!(p, pt![2, 3]);
    }

    #[test]
    fn halfspace_projection_matches_closed_form_and_is_idempotent() {
        let h = hs(pt![1.5, -2.0, 0.5], 0.7);
        for k in 0..50 {
            let t = k as f64 * 0.37;
            let x = pt![3.0 * t.sin(), 2.0 * t.cos() - 1.0, t - 9.0];
            let p = project_halfspace(&Energy, &h, &x, 1e-12).unwrap();
            let excess = (h.slack(&x)).max(0.0) / h.a.dot(&h.a);
            let closed = x.axpy(-excess, &h.a);
            assert!(p.sub(&closed).norm_inf() <= 1e-12);
            for f in [&Energy as &dyn Legendre, &ExpSum] {
                let p = project_halfspace(f, &h, &x, 1e-12).unwrap();
                let again = project_halfspace(f, &h, &p, 1e-12).unwrap();
                assert!(again.sub(&p).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn empty_set_returns_start() {
        let r = project_cutset(
            &Energy,
            &CutSet::universal(),
            &pt![1, 2],
            &InnerSettings::default(),
        )
        .unwrap()
        .solved()
        .unwrap();
        assert_eq!(r.point, pt![1, 2]);
        assert!(r.multipliers.is_empty());
    }

    #[test]
    fn negative_quadrant() {
        let cs = CutSet::from_halfspaces(vec![hs(pt![1, 0], 0.0), hs(pt![0, 1], 0.0)]);
        for s in both_methods() {
            let r = project_cutset(&Energy, &cs, &pt![1, 1], &s)
                .unwrap()
                .solved()
                .unwrap();
            assert!(r.point.norm() <= 1e-9, "{r:?}");
            assert_abs_diff_eq!(r.multipliers[0], 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(r.multipliers[1], 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn wedge_vertex() {
        // Stationarity (2,0) - (1,0) = l1 (1,1) + l2 (1,-1) gives l1 = l2 = 1/2.
        let cs = CutSet::from_halfspaces(vec![hs(pt![1, 1], 1.0), hs(pt![1, -1], 1.0)]);
        for s in both_methods() {
            let r = project_cutset(&Energy, &cs, &pt![2, 0], &s)
                .unwrap()
                .solved()
                .unwrap();
            assert!(r.point.sub(&pt![1, 0]).norm() <= 1e-9, "{r:?}");
            assert_abs_diff_eq!(r.multipliers[0], 0.5, epsilon = 1e-8);
            assert_abs_diff_eq!(r.multipliers[1], 0.5, epsilon = 1e-8);
            assert!(r.stationarity_residual <= 1e-9 * 3.0);
            assert!(r.max_violation <= 1e-9 * 3.0);
            assert!(r.complementarity_residual <= 1e-9 * 3.0);
        }
    }

    #[test]
    fn many_parallel_cuts() {
        // The interior-point route handles long runs of nested parallel cuts.
        let rows: Vec<Halfspace> = (1..=40).map(|k| hs(pt![1], 0.5_f64.powi(k))).collect();
        let cs = CutSet::from_halfspaces(rows);
        let r = project_cutset(&Energy, &cs, &pt![1], &InnerSettings::default())
            .unwrap()
            .solved()
            .unwrap();
        assert!((r.point[0] - 0.5_f64.powi(40)).abs() <= 1e-12, "{r:?}");
    }

    #[test]
    fn infeasible_interval_is_reported() {
        let cs = CutSet::from_halfspaces(vec![hs(pt![1], 0.0), hs(pt![-1], -1.0)]);
        for s in both_methods() {
            match project_cutset(&Energy, &cs, &pt![0.3], &s).unwrap() {
                Projection::Infeasible(rep) => {
                    assert!(rep.residual_floor > 0.0);
                    assert!(rep.witness_multipliers.iter().all(|w| *w >= 0.0));
                }
                other => panic!("expected infeasible, got {other:?}"),
            }
        }
        let cs = CutSet::from_box(&[0.0], &[1.0]).unwrap();
        let mut cs = cs;
        cs.push(crate::sets::Cut::Half(hs(pt![-1], -1.5)));
        for f in [&Energy as &dyn Legendre, &ExpSum] {
            let p = project_cutset(f, &cs, &pt![0.5], &InnerSettings::default()).unwrap();
            assert!(matches!(p, Projection::Infeasible(_)), "{p:?}");
        }
    }

    #[test]
    fn expsum_polytope_agrees_across_methods() {
        let cs = CutSet::from_halfspaces(vec![
            hs(pt![1, 1], 0.5),
            hs(pt![1, -2], 0.0),
            hs(pt![-1, 0], 2.0),
        ]);
        let x0 = pt![1.2, 0.9];
        let [ipm, cda] = both_methods();
        let a = project_cutset(&ExpSum, &cs, &x0, &ipm)
            .unwrap()
            .solved()
            .unwrap();
        let b = project_cutset(&ExpSum, &cs, &x0, &cda)
            .unwrap()
            .solved()
            .unwrap();
        assert!(a.point.sub(&b.point).norm() <= 1e-8, "{a:?} vs {b:?}");
    }

    #[test]
    fn warm_start_reaches_same_point() {
        let cs = CutSet::from_halfspaces(vec![
            hs(pt![1, 1], 1.0),
            hs(pt![1, -1], 1.0),
            hs(pt![0, 1], 2.0),
        ]);
        let s = InnerSettings {
            method: InnerMethod::CoordinateAscent,
            ..InnerSettings::default()
        };
        let cold = project_cutset(&Energy, &cs, &pt![2, 0], &s)
            .unwrap()
            .solved()
            .unwrap();
        let warm = project_cutset_warm(&Energy, &cs, &pt![2, 0], &s, Some(&[3.0, 0.1]))
            .unwrap()
            .solved()
            .unwrap();
        assert!(cold.point.sub(&warm.point).norm() <= 1e-8);
    }

    #[test]
    fn three_point_examples() {
        let (x, xhat) = (pt![2, 3], pt![0, 3]);
        assert_eq!(
            three_point_residual(&Energy, &xhat, &x, &xhat).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            three_point_residual(&Energy, &pt![-1, 0], &x, &xhat).unwrap(),
            2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn variational_examples() {
        let cs = CutSet::from_halfspaces(vec![hs(pt![1, 0], 0.0)]);
        let (x, xhat) = (pt![2, 3], pt![0, 3]);
        assert_eq!(
            variational_residual(&Energy, &cs, &x, &xhat, std::slice::from_ref(&xhat), 1e-9)
                .unwrap(),
            0.0
        );
        let probes: Vec<Point> = (0..20)
            .map(|k| pt![-(k as f64) * 0.3, (k as f64).sin() * 4.0])
            .collect();
        assert!(variational_residual(&Energy, &cs, &x, &xhat, &probes, 1e-9).unwrap() <= 1e-9);
        // Wrong projection: shifted into the interior.
        let wrong = pt![-0.5, 3];
        assert!(variational_residual(&Energy, &cs, &x, &wrong, &probes, 1e-9).unwrap() > 0.0);
        assert!(matches!(
            variational_residual(&Energy, &cs, &x, &xhat, &[pt![1, 0]], 1e-9),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn settings_validation() {
        let bad = InnerSettings {
            kkt_tol: 0.0,
            ..InnerSettings::default()
        };
        assert!(project_cutset(&Energy, &CutSet::universal(), &pt![1], &bad).is_err());
    }
}
