//! Brute-force references: exhaustive grid projection and finite-difference
//! gradients. Neither shares code paths with the solvers they check.

use crate::error::{Error, Result};
use crate::legendre::Legendre;
use crate::point::Point;

/// An axis-aligned grid over `[lo, hi]` with `resolution` points per axis.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub lo: Point,
    pub hi: Point,
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(lo: Point, hi: Point, resolution: usize) -> Result<Self> {
        Error::check_dims(lo.dim(), hi.dim())?;
        if lo.dim() > 2 {
            return Err(Error::Usage("grid oracle supports dimension <= 2".into()));
        }
        if resolution < 2 {
            return Err(Error::Usage("grid resolution must be >= 2".into()));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| !(l < h)) {
            return Err(Error::Usage("grid needs lo < hi componentwise".into()));
        }
        Ok(GridSpec { lo, hi, resolution })
    }

    /// Spacing along each axis.
    pub fn spacing(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(self.hi.iter())
            .map(|(l, h)| (h - l) / (self.resolution - 1) as f64)
            .collect()
    }

    fn coord(&self, axis: usize, k: usize) -> f64 {
        let t = k as f64 / (self.resolution - 1) as f64;
        self.lo[axis] + t * (self.hi[axis] - self.lo[axis])
    }
}

/// Feasible grid point minimizing `D(., x0)`. Ties go to the
/// lexicographically smallest point (scan order is lexicographic and only a
/// strict improvement replaces the incumbent).
pub fn grid_projection(
    f: &dyn Legendre,
    membership: impl Fn(&Point) -> bool,
    x0: &Point,
    grid: &GridSpec,
) -> Result<Point> {
    Error::check_dims(grid.lo.dim(), x0.dim())?;
    let dim = x0.dim();
    let n = grid.resolution;
    let total = n.pow(dim as u32);
    let mut best: Option<(f64, Point)> = None;
    let mut coords = vec![0.0; dim];
    for idx in 0..total {
        let mut rem = idx;
        for axis in (0..dim).rev() {
            coords[axis] = grid.coord(axis, rem % n);
            rem /= n;
        }
        let z = Point::from_raw(coords.clone());
        if !membership(&z) {
            continue;
        }
        let d = f.distance(&z, x0)?;
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, z));
        }
    }
    best.map(|(_, z)| z).ok_or(Error::InfeasibleOnGrid)
}

/// Central finite-difference gradient of `eval` at `x`.
pub fn fd_gradient(eval: impl Fn(&Point) -> Result<f64>, x: &Point, step: f64) -> Result<Point> {
    if !(step > 0.0) {
        return Err(Error::Usage(
            "finite-difference step must be positive".into(),
        ));
    }
    let mut g = Vec::with_capacity(x.dim());
    let mut probe = x.clone().into_vec();
    for i in 0..x.dim() {
        let orig = probe[i];
        probe[i] = orig + step;
        let fp = eval(&Point::from_raw(probe.clone()))?;
        probe[i] = orig - step;
        let fm = eval(&Point::from_raw(probe.clone()))?;
        probe[i] = orig;
        g.push((fp - fm) / (2.0 * step));
    }
    Ok(Point::from_raw(g))
}
