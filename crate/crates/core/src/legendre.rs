//! Legendre functions and the Bregman distances they generate.
//!
//! A [`Legendre`] implementation is a strictly convex, differentiable
//! `f: R^d -> R` together with the gradient of its Fenchel conjugate. The
//! conjugate domain is exposed as an explicit predicate so callers (the
//! halfspace root finder in particular) can stay inside it instead of
//! clamping.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oracle::fd_gradient;
use crate::point::Point;

/// Slack allowed when asserting `D(x, y) >= 0`.
pub const DISTANCE_NONNEG_SLACK: f64 = 1e-12;
/// Default tolerance for `conj_grad(grad(x)) == x`.
pub const INVERSE_GRADIENT_TOL: f64 = 1e-10;
/// Coordinates beyond this magnitude are rejected by [`ExpSum`].
pub const EXP_SATURATION: f64 = 700.0;

pub trait Legendre: Debug + Send + Sync {
    /// Name used in scenario configs.
    fn name(&self) -> &'static str;

    fn eval(&self, x: &Point) -> Result<f64>;

    fn grad(&self, x: &Point) -> Result<Point>;

    /// Gradient of the conjugate, the inverse of [`Legendre::grad`].
    /// Points outside the conjugate domain yield [`Error::Domain`].
    fn conj_grad(&self, u: &Point) -> Result<Point>;

    fn in_conj_domain(&self, u: &Point) -> bool;

    /// `<dir, Hess f*(u) dir>` when available; used for Newton steps in the
    /// multiplier root finder.
    fn conj_curvature(&self, _u: &Point, _dir: &Point) -> Option<f64> {
        None
    }

    /// Row-major Hessian of `f`. The default differentiates `grad` centrally.
    fn hessian(&self, x: &Point) -> Result<Vec<f64>> {
        let d = x.dim();
        let mut h = vec![0.0; d * d];
        for j in 0..d {
            let step = 1e-6 * (1.0 + x[j].abs());
            let mut e = vec![0.0; d];
            e[j] = step;
            let e = Point::from_raw(e);
            let gp = self.grad(&x.add(&e))?;
            let gm = self.grad(&x.sub(&e))?;
            for i in 0..d {
                h[i * d + j] = (gp[i] - gm[i]) / (2.0 * step);
            }
        }
        Ok(h)
    }

    /// `f(x) - f(y) - <grad f(y), x - y>`. Implementations may override with
    /// a cancellation-free formula.
    fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        Error::check_dims(x.dim(), y.dim())?;
        let gy = self.grad(y)?;
        let d = self.eval(x)? - self.eval(y)? - gy.dot(&x.sub(y));
        Ok(d.max(0.0))
    }
}

/// `f(x) = ||x||^2 / 2`; every Bregman notion collapses to its Euclidean one.
#[derive(Debug, Clone, Copy, Default)]
pub struct Energy;

impl Legendre for Energy {
    fn name(&self) -> &'static str {
        "energy"
    }

    fn eval(&self, x: &Point) -> Result<f64> {
        Ok(0.5 * x.dot(x))
    }

    fn grad(&self, x: &Point) -> Result<Point> {
        Ok(x.clone())
    }

    fn conj_grad(&self, u: &Point) -> Result<Point> {
        Ok(u.clone())
    }

    fn hessian(&self, x: &Point) -> Result<Vec<f64>> {
        let d = x.dim();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = 1.0;
        }
        Ok(h)
    }

    fn in_conj_domain(&self, u: &Point) -> bool {
        u.is_finite()
    }

    fn conj_curvature(&self, _u: &Point, dir: &Point) -> Option<f64> {
        Some(dir.dot(dir))
    }

    fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        Error::check_dims(x.dim(), y.dim())?;
        let d = x.sub(y);
        Ok(0.5 * d.dot(&d))
    }
}

/// `f(x) = sum_i exp(x_i)`. The conjugate domain is the open positive orthant.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpSum;

impl ExpSum {
    fn check_range(x: &Point) -> Result<()> {
        match x.iter().position(|c| !(c.abs() <= EXP_SATURATION)) {
            None => Ok(()),
            Some(i) => Err(Error::Domain(format!(
                "expsum: coordinate {i} = {} outside [-{EXP_SATURATION}, {EXP_SATURATION}]",
                x[i]
            ))),
        }
    }
}

impl Legendre for ExpSum {
    fn name(&self) -> &'static str {
        "expsum"
    }

    fn eval(&self, x: &Point) -> Result<f64> {
        Self::check_range(x)?;
        Ok(x.iter().map(|c| c.exp()).sum())
    }

    fn grad(&self, x: &Point) -> Result<Point> {
        Self::check_range(x)?;
        Ok(Point::from_raw(x.iter().map(|c| c.exp()).collect()))
    }

    fn hessian(&self, x: &Point) -> Result<Vec<f64>> {
        Self::check_range(x)?;
        let d = x.dim();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = x[i].exp();
        }
        Ok(h)
    }

    fn conj_grad(&self, u: &Point) -> Result<Point> {
        if !self.in_conj_domain(u) {
            return Err(Error::Domain(format!(
                "expsum: {u:?} is outside the positive orthant"
            )));
        }
        Ok(Point::from_raw(u.iter().map(|c| c.ln()).collect()))
    }

    fn in_conj_domain(&self, u: &Point) -> bool {
        u.iter().all(|&c| c > 0.0 && c.is_finite())
    }

    fn conj_curvature(&self, u: &Point, dir: &Point) -> Option<f64> {
        Some(u.iter().zip(dir.iter()).map(|(ui, di)| di * di / ui).sum())
    }

    fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        Error::check_dims(x.dim(), y.dim())?;
        Self::check_range(x)?;
        Self::check_range(y)?;
        // e^y (e^(x-y) - 1 - (x-y)), summed; avoids cancellation near x = y.
        let d = x
            .iter()
            .zip(y.iter())
            .map(|(xi, yi)| {
                let t = xi - yi;
                yi.exp() * (t.exp_m1() - t)
            })
            .sum::<f64>();
        Ok(d.max(0.0))
    }
}

/// Looks up a Legendre instance by its config name.
pub fn legendre_by_name(name: &str) -> Option<Arc<dyn Legendre>> {
    match name {
        "energy" => Some(Arc::new(Energy)),
        "expsum" => Some(Arc::new(ExpSum)),
        _ => None,
    }
}

/// `D_f(x, y)`.
pub fn bregman_distance(f: &dyn Legendre, x: &Point, y: &Point) -> Result<f64> {
    f.distance(x, y)
}

#[derive(Debug, Clone, Copy)]
pub struct LegendreCheckSettings {
    /// Central-difference step.
    pub step: f64,
    /// Allowed deviation between `grad` and the finite-difference gradient.
    pub fd_tol: f64,
    /// Allowed `||conj_grad(grad(x)) - x||`.
    pub inverse_tol: f64,
}

impl LegendreCheckSettings {
    pub fn new(step: f64, tol: f64) -> Self {
        LegendreCheckSettings {
            step,
            fd_tol: tol,
            inverse_tol: tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LegendreReport {
    pub max_grad_deviation: f64,
    pub max_inverse_deviation: f64,
    /// Samples that could not be evaluated, with the reason.
    pub sample_errors: Vec<(usize, String)>,
    pub passed: bool,
}

/// Checks `grad` against central finite differences of `eval`, and
/// `conj_grad` against `grad`, on every sample.
pub fn check_legendre(
    f: &dyn Legendre,
    samples: &[Point],
    settings: LegendreCheckSettings,
) -> Result<LegendreReport> {
    if !(settings.step > 0.0 && settings.fd_tol > 0.0 && settings.inverse_tol > 0.0) {
        return Err(Error::Usage(
            "check_legendre: step and tolerances must be positive".into(),
        ));
    }
    let mut max_grad = 0.0_f64;
    let mut max_inv = 0.0_f64;
    let mut sample_errors = Vec::new();
    for (i, x) in samples.iter().enumerate() {
        let outcome = (|| -> Result<(f64, f64)> {
            let g = f.grad(x)?;
            let fd = fd_gradient(|z| f.eval(z), x, settings.step)?;
            let grad_dev = g.sub(&fd).norm_inf();
            if !f.in_conj_domain(&g) {
                return Err(Error::Domain("grad(x) outside the conjugate domain".into()));
            }
            let back = f.conj_grad(&g)?;
            Ok((grad_dev, back.sub(x).norm()))
        })();
        match outcome {
            Ok((gd, inv)) => {
                max_grad = max_grad.max(gd);
                max_inv = max_inv.max(inv);
            }
            Err(e) => sample_errors.push((i, e.to_string())),
        }
    }
    let passed = max_grad <= settings.fd_tol && max_inv <= settings.inverse_tol;
    Ok(LegendreReport {
        max_grad_deviation: max_grad,
        max_inverse_deviation: max_inv,
        sample_errors,
        passed,
    })
}
