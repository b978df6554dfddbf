//! One-dimensional multiplier search for a single halfspace constraint.
//!
//! For a dual base point `w` and a halfspace `<a, z> <= b`, the candidate
//! primal point at multiplier `mu` is `z(mu) = conj_grad(w - mu * a)` and
//!
//! ```text
//!     phi(mu) = <a, z(mu)> - b
//! ```
//!
//! is nonincreasing (convexity of `f*`). The search returns the smallest
//! `mu >= 0` at which the constraint holds with complementarity, i.e. `0`
//! when `z(0)` is admissible and feasible, otherwise the root of `phi`.
//! Bracketing keeps every probe inside the conjugate domain; Newton steps
//! are taken only when they land strictly inside the current bracket.

use crate::error::{Error, Result};
use crate::legendre::Legendre;
use crate::point::Point;

const MAX_EXPANSIONS: usize = 1100;
const MAX_REFINEMENTS: usize = 300;
const REL_WIDTH: f64 = 1e-14;

struct Phi<'a> {
    f: &'a dyn Legendre,
    w: &'a Point,
    a: &'a Point,
    b: f64,
}

enum Probe {
    Outside,
    Value { phi: f64, slope: Option<f64> },
}

impl Phi<'_> {
    fn dual(&self, mu: f64) -> Point {
        self.w.axpy(-mu, self.a)
    }

    fn probe(&self, mu: f64) -> Result<Probe> {
        let u = self.dual(mu);
        if !self.f.in_conj_domain(&u) {
            return Ok(Probe::Outside);
        }
        let z = self.f.conj_grad(&u)?;
        let phi = self.a.dot(&z) - self.b;
        if !phi.is_finite() {
            return Ok(Probe::Outside);
        }
        let slope = self.f.conj_curvature(&u, self.a).map(|c| -c);
        Ok(Probe::Value { phi, slope })
    }
}

/// Returns the optimal nonnegative multiplier. `start` must be a multiplier
/// at which `w - start * a` lies in the conjugate domain.
pub(crate) fn solve(f: &dyn Legendre, w: &Point, a: &Point, b: f64, start: f64) -> Result<f64> {
    let phi = Phi { f, w, a, b };
    let start = start.max(0.0);

    let (phi_start, slope_start) = match phi.probe(start)? {
        Probe::Value { phi, slope } => (phi, slope),
        Probe::Outside => {
            return Err(Error::Domain(
                "multiplier search started outside the conjugate domain".into(),
            ))
        }
    };
    if phi_start == 0.0 {
        return Ok(start);
    }

    // Bracket [lo, hi] with phi(lo) > 0 >= phi(hi), both admissible.
    let (lo, hi) = if phi_start > 0.0 {
        let (hi, hi_phi) = expand_up(&phi, start, phi_start, slope_start)?;
        if hi_phi == 0.0 {
            return Ok(hi);
        }
        (start, hi)
    } else {
        if start == 0.0 {
            return Ok(0.0);
        }
        match phi.probe(0.0)? {
            Probe::Value { phi: p0, .. } if p0 <= 0.0 => return Ok(0.0),
            Probe::Value { .. } => (0.0, start),
            Probe::Outside => (find_admissible_positive(&phi, 0.0, start)?, start),
        }
    };
    refine(&phi, lo, hi)
}

/// Moves upward from `lo` (where `phi > 0`) until `phi <= 0`.
fn expand_up(phi: &Phi<'_>, lo: f64, phi_lo: f64, slope: Option<f64>) -> Result<(f64, f64)> {
    let mut lo = lo;
    let mut step = match slope {
        Some(s) if s < 0.0 => 2.0 * phi_lo / -s,
        _ => lo.abs().max(1.0),
    };
    if !(step.is_finite() && step > 0.0) {
        step = lo.abs().max(1.0);
    }
    for _ in 0..MAX_EXPANSIONS {
        let cand = lo + step;
        if !cand.is_finite() {
            break;
        }
        match phi.probe(cand)? {
            Probe::Value { phi: p, .. } if p <= 0.0 => return Ok((cand, p)),
            Probe::Value { .. } => {
                lo = cand;
                step *= 2.0;
            }
            Probe::Outside => {
                // phi tends to -infinity at the conjugate-domain boundary;
                // close in on it from the admissible side.
                let mut inside = lo;
                let mut outside = cand;
                for _ in 0..MAX_REFINEMENTS {
                    let mid = 0.5 * (inside + outside);
                    if mid <= inside || mid >= outside {
                        break;
                    }
                    match phi.probe(mid)? {
                        Probe::Value { phi: p, .. } if p <= 0.0 => return Ok((mid, p)),
                        Probe::Value { .. } => inside = mid,
                        Probe::Outside => outside = mid,
                    }
                }
                return Err(Error::Domain(
                    "multiplier bracket reached the conjugate-domain boundary without a sign change"
                        .into(),
                ));
            }
        }
    }
    Err(Error::Domain("multiplier bracket search diverged".into()))
}

/// Finds an admissible point in `(outside, inside)` with `phi > 0`.
fn find_admissible_positive(phi: &Phi<'_>, outside: f64, inside: f64) -> Result<f64> {
    let (mut outside, mut inside) = (outside, inside);
    for _ in 0..MAX_REFINEMENTS {
        let mid = 0.5 * (inside + outside);
        if mid <= outside || mid >= inside {
            break;
        }
        match phi.probe(mid)? {
            Probe::Value { phi: p, .. } if p > 0.0 => return Ok(mid),
            Probe::Value { .. } => inside = mid,
            Probe::Outside => outside = mid,
        }
    }
    Err(Error::Domain(
        "no admissible multiplier with positive constraint value".into(),
    ))
}

/// Safeguarded Newton/bisection on an admissible bracket.
fn refine(phi: &Phi<'_>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..MAX_REFINEMENTS {
        let (p, slope) = match phi.probe(mu)? {
            Probe::Value { phi, slope } => (phi, slope),
            // Both bracket ends are admissible and the domain is convex.
            Probe::Outside => {
                return Err(Error::Domain("multiplier left the conjugate domain".into()))
            }
        };
        if p == 0.0 {
            return Ok(mu);
        }
        if p > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if hi - lo <= REL_WIDTH * hi.abs().max(lo.abs()) {
            break;
        }
        let newton = slope
            .filter(|s| *s < 0.0)
            .map(|s| mu - p / s)
            .filter(|n| *n > lo && *n < hi);
        let next = newton.unwrap_or(0.5 * (lo + hi));
        if next == mu {
            break;
        }
        mu = next;
    }
    // The bracket end with the smaller |phi| is returned; hi is always
    // feasible, so prefer it when widths have collapsed.
    pick(phi, lo, hi)
}

fn pick(phi: &Phi<'_>, lo: f64, hi: f64) -> Result<f64> {
    let value = |m: f64| -> Result<f64> {
        match phi.probe(m)? {
            Probe::Value { phi, .. } => Ok(phi.abs()),
            Probe::Outside => Ok(f64::INFINITY),
        }
    };
    let (vl, vh) = (value(lo)?, value(hi)?);
    Ok(if vh <= vl { hi } else { lo })
}
