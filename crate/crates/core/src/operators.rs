//! Quasi Bregman nonexpansive operators: subgradient projectors onto level
//! sets, the distance-power projector and the Moreau-envelope projector,
//! together with a small fixture catalog and a QBNE checker.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::driver::OracleMap;
use crate::error::{Error, Result};
use crate::legendre::{Energy, Legendre};
use crate::point::Point;
use crate::projection::{project_cutset, project_halfspace, InnerSettings, Projection};
use crate::sets::{Cut, CutSet, Halfspace};

/// Boundary-hit tolerance passed to single-halfspace projections.
const HALFSPACE_TOL: f64 = 1e-9;

/// Smallest admissible `e - h(p)` in the Moreau projector.
pub const MOREAU_DENOMINATOR_FLOOR: f64 = 1e-14;

/// A continuous convex `g` with a subgradient selection and a nonempty
/// sublevel set `{g <= 0}`.
pub trait LevelSetProblem: fmt::Debug + Send + Sync {
    fn value(&self, z: &Point) -> Result<f64>;
    fn subgradient(&self, z: &Point) -> Result<Point>;

    /// `{g <= 0}` when it has a closed form.
    fn level_set(&self) -> Option<ConvexSet> {
        None
    }
}

/// Level-function fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LevelFunction {
    /// `<a, x> - b`
    Affine { a: Point, b: f64 },
    /// `||x - c||^2 - r^2`
    Ball {
        #[serde(default)]
        center: Option<Point>,
        radius: f64,
    },
    /// `||x - c|| - r`, with the selection `s(c) = 0`.
    AbsNorm {
        #[serde(default)]
        center: Option<Point>,
        radius: f64,
    },
    /// `max_i <a_i, x> - b_i`, with the first maximizing piece as selection.
    MaxAffine { pieces: Vec<Halfspace> },
}

fn offset(z: &Point, center: &Option<Point>) -> Result<Point> {
    match center {
        Some(c) => {
            Error::check_dims(c.dim(), z.dim())?;
            Ok(z.sub(c))
        }
        None => Ok(z.clone()),
    }
}

fn center_or_origin(center: &Option<Point>, dim: usize) -> Point {
    center.clone().unwrap_or_else(|| Point::zeros(dim))
}

impl LevelFunction {
    /// Dimension fixed by the fixture, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            LevelFunction::Affine { a, .. } => Some(a.dim()),
            LevelFunction::Ball { center, .. } | LevelFunction::AbsNorm { center, .. } => {
                center.as_ref().map(Point::dim)
            }
            LevelFunction::MaxAffine { pieces } => pieces.first().map(Halfspace::dim),
        }
    }

    /// Rejects fixtures whose level set is empty or malformed.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if let Some(d) = self.dim() {
            Error::check_dims(dim, d)?;
        }
        match self {
            LevelFunction::Affine { a, .. } => {
                if a.norm() == 0.0 {
                    return Err(Error::Fixture("affine level function with a = 0".into()));
                }
            }
            LevelFunction::Ball { radius, .. } | LevelFunction::AbsNorm { radius, .. } => {
                if !(*radius >= 0.0) {
                    return Err(Error::Fixture(format!(
                        "radius {radius} gives an empty level set"
                    )));
                }
            }
            LevelFunction::MaxAffine { pieces } => {
                if pieces.is_empty() {
                    return Err(Error::Fixture("max-affine needs at least one piece".into()));
                }
                for p in pieces {
                    Error::check_dims(dim, p.dim())?;
                }
                let cs = CutSet::from_halfspaces(pieces.clone());
                let probe =
                    project_cutset(&Energy, &cs, &Point::zeros(dim), &InnerSettings::default())?;
                if let Projection::Infeasible(_) = probe {
                    return Err(Error::Fixture("max-affine level set is empty".into()));
                }
            }
        }
        Ok(())
    }
}

impl LevelSetProblem for LevelFunction {
    fn value(&self, z: &Point) -> Result<f64> {
        match self {
            LevelFunction::Affine { a, b } => {
                Error::check_dims(a.dim(), z.dim())?;
                Ok(a.dot(z) - b)
            }
            LevelFunction::Ball { center, radius } => {
                let u = offset(z, center)?;
                Ok(u.dot(&u) - radius * radius)
            }
            LevelFunction::AbsNorm { center, radius } => Ok(offset(z, center)?.norm() - radius),
            LevelFunction::MaxAffine { pieces } => {
                let mut best = f64::NEG_INFINITY;
                for p in pieces {
                    Error::check_dims(p.dim(), z.dim())?;
                    best = best.max(p.slack(z));
                }
                Ok(best)
            }
        }
    }

    fn subgradient(&self, z: &Point) -> Result<Point> {
        match self {
            LevelFunction::Affine { a, .. } => {
                Error::check_dims(a.dim(), z.dim())?;
                Ok(a.clone())
            }
            LevelFunction::Ball { center, .. } => Ok(offset(z, center)?.scale(2.0)),
            LevelFunction::AbsNorm { center, .. } => {
                let u = offset(z, center)?;
                let n = u.norm();
                Ok(if n == 0.0 {
                    Point::zeros(z.dim())
                } else {
                    u.scale(1.0 / n)
                })
            }
            LevelFunction::MaxAffine { pieces } => {
                let mut best: Option<(f64, &Halfspace)> = None;
                for p in pieces {
                    Error::check_dims(p.dim(), z.dim())?;
                    let v = p.slack(z);
                    if best.is_none_or(|(bv, _)| v > bv) {
                        best = Some((v, p));
                    }
                }
                best.map(|(_, p)| p.a.clone())
                    .ok_or_else(|| Error::Fixture("max-affine needs at least one piece".into()))
            }
        }
    }

    fn level_set(&self) -> Option<ConvexSet> {
        match self {
            LevelFunction::Affine { a, b } => Halfspace::new(a.clone(), *b)
                .ok()
                .map(|h| ConvexSet::Halfspaces(vec![h])),
            LevelFunction::Ball { center, radius } | LevelFunction::AbsNorm { center, radius } => {
                let dim = center.as_ref().map_or(1, Point::dim);
                Some(ConvexSet::Ball {
                    center: center_or_origin(center, dim),
                    radius: *radius,
                })
            }
            LevelFunction::MaxAffine { pieces } => Some(ConvexSet::Halfspaces(pieces.clone())),
        }
    }
}

/// `H_g(z, s(z)) = {x : g(z) + <s(z), x - z> <= 0}`.
pub fn level_cut(prob: &dyn LevelSetProblem, z: &Point) -> Result<Cut> {
    let g = prob.value(z)?;
    let s = prob.subgradient(z)?;
    Error::check_dims(z.dim(), s.dim())?;
    if s.norm() == 0.0 {
        if g <= 0.0 {
            return Ok(Cut::Universal);
        }
        return Err(Error::Fixture(format!(
            "zero subgradient with g(z) = {g:e} > 0: the level set is empty"
        )));
    }
    let b = s.dot(z) - g;
    Ok(Cut::Half(Halfspace::new(s, b)?))
}

/// `Q_s(z)`: the Bregman projection of `z` onto its own level cut.
pub fn bregman_subgradient_projector(
    f: &dyn Legendre,
    prob: &dyn LevelSetProblem,
    z: &Point,
) -> Result<Point> {
    if prob.value(z)? <= 0.0 {
        return Ok(z.clone());
    }
    match level_cut(prob, z)? {
        Cut::Universal => Ok(z.clone()),
        Cut::Half(h) => project_halfspace(f, &h, z, HALFSPACE_TOL),
    }
}

/// `z - g(z) / ||s(z)||^2 * s(z)` for infeasible `z`.
pub fn classical_subgradient_projector(prob: &dyn LevelSetProblem, z: &Point) -> Result<Point> {
    let g = prob.value(z)?;
    if g <= 0.0 {
        return Ok(z.clone());
    }
    let s = prob.subgradient(z)?;
    Error::check_dims(z.dim(), s.dim())?;
    let n2 = s.dot(&s);
    if n2 == 0.0 {
        return Err(Error::Fixture(format!(
            "zero subgradient with g(z) = {g:e} > 0: the level set is empty"
        )));
    }
    Ok(z.axpy(-g / n2, &s))
}

/// `(1 - 1/p) z + (1/p) P_C(z)`.
pub fn distance_power_projector(
    proj: impl Fn(&Point) -> Result<Point>,
    p: f64,
    z: &Point,
) -> Result<Point> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Usage(format!(
            "distance-power exponent must be >= 1, got {p}"
        )));
    }
    let pc = proj(z)?;
    Error::check_dims(z.dim(), pc.dim())?;
    Ok(z.combine(1.0 - 1.0 / p, &pc, 1.0 / p))
}

/// A function `h` together with its proximal map
/// `P_h(x) = argmin_w h(w) + ||w - x||^2 / 2`.
pub trait ProxOracle: fmt::Debug + Send + Sync {
    fn value(&self, x: &Point) -> Result<f64>;
    fn prox(&self, x: &Point) -> Result<Point>;
}

/// `e_h(x) = h(P_h x) + ||x - P_h x||^2 / 2`, returned with `P_h x`.
pub fn moreau_envelope(h: &dyn ProxOracle, x: &Point) -> Result<(f64, Point)> {
    let p = h.prox(x)?;
    Error::check_dims(x.dim(), p.dim())?;
    let d = x.sub(&p);
    Ok((h.value(&p)? + 0.5 * d.dot(&d), p))
}

/// The subgradient projector of `g = e_h`, written through `P_h`.
pub fn moreau_projector(h: &dyn ProxOracle, z: &Point) -> Result<Point> {
    let (e, p) = moreau_envelope(h, z)?;
    if e <= 0.0 {
        return Ok(z.clone());
    }
    let hp = h.value(&p)?;
    let denom = e - hp;
    if !(denom >= MOREAU_DENOMINATOR_FLOOR) {
        return Err(Error::Degenerate(format!(
            "Moreau projector: e_h(z) = {e:e} > 0 but e_h(z) - h(P_h z) = {denom:e} (z = {z:?}, P_h z = {p:?})"
        )));
    }
    Ok(z.combine((e - 2.0 * hp) / (2.0 * denom), &p, e / (2.0 * denom)))
}

/// Proximal fixtures.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxFunction {
    /// `<a, x> - b`
    Affine { a: Point, b: f64 },
    /// `||x - c||^2 - r^2`
    Ball { center: Option<Point>, radius: f64 },
    /// `||x - c|| - r`
    AbsNorm { center: Option<Point>, radius: f64 },
    /// Zero on `C`; reached only through its prox `P_C`, so that
    /// `e_h = d_C^2 / 2`.
    Indicator(ConvexSet),
}

impl ProxFunction {
    pub fn from_level(g: &LevelFunction) -> Result<Self> {
        Ok(match g.clone() {
            LevelFunction::Affine { a, b } => ProxFunction::Affine { a, b },
            LevelFunction::Ball { center, radius } => ProxFunction::Ball { center, radius },
            LevelFunction::AbsNorm { center, radius } => ProxFunction::AbsNorm { center, radius },
            LevelFunction::MaxAffine { .. } => {
                return Err(Error::Usage(
                    "max-affine has no proximal map in the catalog".into(),
                ))
            }
        })
    }
}

impl ProxOracle for ProxFunction {
    fn value(&self, x: &Point) -> Result<f64> {
        match self {
            ProxFunction::Affine { a, b } => LevelFunction::Affine {
                a: a.clone(),
                b: *b,
            }
            .value(x),
            ProxFunction::Ball { center, radius } => {
                let u = offset(x, center)?;
                Ok(u.dot(&u) - radius * radius)
            }
            ProxFunction::AbsNorm { center, radius } => Ok(offset(x, center)?.norm() - radius),
            ProxFunction::Indicator(set) => Ok(if set.contains(x, 1e-9)? {
                0.0
            } else {
                f64::INFINITY
            }),
        }
    }

    fn prox(&self, x: &Point) -> Result<Point> {
        match self {
            ProxFunction::Affine { a, .. } => {
                Error::check_dims(a.dim(), x.dim())?;
                Ok(x.sub(a))
            }
            ProxFunction::Ball { center, .. } => {
                let c = center_or_origin(center, x.dim());
                Error::check_dims(c.dim(), x.dim())?;
                Ok(c.combine(2.0 / 3.0, x, 1.0 / 3.0))
            }
            ProxFunction::AbsNorm { center, .. } => {
                let c = center_or_origin(center, x.dim());
                Error::check_dims(c.dim(), x.dim())?;
                let u = x.sub(&c);
                let n = u.norm();
                Ok(if n <= 1.0 {
                    c
                } else {
                    c.axpy(1.0 - 1.0 / n, &u)
                })
            }
            ProxFunction::Indicator(set) => set.project(x),
        }
    }
}

/// `g = e_h` as a level-set problem, with gradient `x - P_h x`.
#[derive(Debug, Clone)]
pub struct MoreauLevel<P>(pub P);

impl<P: ProxOracle> LevelSetProblem for MoreauLevel<P> {
    fn value(&self, z: &Point) -> Result<f64> {
        moreau_envelope(&self.0, z).map(|(e, _)| e)
    }

    fn subgradient(&self, z: &Point) -> Result<Point> {
        Ok(z.sub(&self.0.prox(z)?))
    }
}

/// Closed convex sets with exact orthogonal projectors.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Universal,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Halfspaces(Vec<Halfspace>),
    Ball { center: Point, radius: f64 },
}

impl ConvexSet {
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexSet::Universal => None,
            ConvexSet::Box { lo, .. } => Some(lo.len()),
            ConvexSet::Halfspaces(rows) => rows.first().map(Halfspace::dim),
            ConvexSet::Ball { center, .. } => Some(center.dim()),
        }
    }

    pub fn contains(&self, z: &Point, tol: f64) -> Result<bool> {
        if let Some(d) = self.dim() {
            Error::check_dims(d, z.dim())?;
        }
        Ok(match self {
            ConvexSet::Universal => true,
            ConvexSet::Box { lo, hi } => {
                (0..z.dim()).all(|i| z[i] >= lo[i] - tol && z[i] <= hi[i] + tol)
            }
            ConvexSet::Halfspaces(rows) => rows.iter().all(|h| h.contains(z, tol)),
            ConvexSet::Ball { center, radius } => z.distance(center) <= radius + tol,
        })
    }

    /// Polyhedral sets as a [`CutSet`]; `None` for balls.
    pub fn to_cutset(&self) -> Result<Option<CutSet>> {
        Ok(match self {
            ConvexSet::Universal => Some(CutSet::universal()),
            ConvexSet::Box { lo, hi } => Some(CutSet::from_box(lo, hi)?),
            ConvexSet::Halfspaces(rows) => Some(CutSet::from_halfspaces(rows.clone())),
            ConvexSet::Ball { .. } => None,
        })
    }

    /// Orthogonal projection `P_C(z)`.
    pub fn project(&self, z: &Point) -> Result<Point> {
        if let Some(d) = self.dim() {
            Error::check_dims(d, z.dim())?;
        }
        match self {
            ConvexSet::Universal => Ok(z.clone()),
            ConvexSet::Box { lo, hi } => {
                Point::new((0..z.dim()).map(|i| z[i].clamp(lo[i], hi[i])).collect())
            }
            ConvexSet::Ball { center, radius } => {
                let u = z.sub(center);
                let n = u.norm();
                Ok(if n <= *radius {
                    z.clone()
                } else {
                    center.axpy(radius / n, &u)
                })
            }
            ConvexSet::Halfspaces(rows) if rows.len() == 1 => {
                let h = &rows[0];
                let s = h.slack(z);
                Ok(if s <= 0.0 {
                    z.clone()
                } else {
                    z.axpy(-s / h.a.dot(&h.a), &h.a)
                })
            }
            ConvexSet::Halfspaces(rows) => {
                let cs = CutSet::from_halfspaces(rows.clone());
                match project_cutset(&Energy, &cs, z, &InnerSettings::default())? {
                    Projection::Solved(r) => Ok(r.point),
                    Projection::Infeasible(_) => {
                        Err(Error::Fixture("polyhedral set is empty".into()))
                    }
                }
            }
        }
    }
}

/// `Q_s` as an oracle for the driver.
#[derive(Debug, Clone)]
pub struct SubgradientProjector {
    pub f: Arc<dyn Legendre>,
    pub g: Arc<dyn LevelSetProblem>,
}

impl OracleMap for SubgradientProjector {
    fn apply(&self, x: &Point) -> Result<Point> {
        bregman_subgradient_projector(self.f.as_ref(), self.g.as_ref(), x)
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalSubgradientProjector {
    pub g: Arc<dyn LevelSetProblem>,
}

impl OracleMap for ClassicalSubgradientProjector {
    fn apply(&self, x: &Point) -> Result<Point> {
        classical_subgradient_projector(self.g.as_ref(), x)
    }
}

#[derive(Debug, Clone)]
pub struct DistancePowerProjector {
    pub set: ConvexSet,
    pub p: f64,
}

impl OracleMap for DistancePowerProjector {
    fn apply(&self, x: &Point) -> Result<Point> {
        distance_power_projector(|z| self.set.project(z), self.p, x)
    }
}

#[derive(Debug, Clone)]
pub struct MoreauProjector {
    pub h: Arc<dyn ProxOracle>,
}

impl OracleMap for MoreauProjector {
    fn apply(&self, x: &Point) -> Result<Point> {
        moreau_projector(self.h.as_ref(), x)
    }
}

#[derive(Debug, Clone)]
pub struct Projector {
    pub set: ConvexSet,
}

impl OracleMap for Projector {
    fn apply(&self, x: &Point) -> Result<Point> {
        self.set.project(x)
    }
}

/// `x -> A x + b`, row-major `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl AffineMap {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let d = b.len();
        if a.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.len(),
            });
        }
        for row in &a {
            Error::check_dims(d, row.len())?;
        }
        if a.iter().flatten().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Usage("affine map has non-finite entries".into()));
        }
        Ok(AffineMap { a, b })
    }
}

impl OracleMap for AffineMap {
    fn apply(&self, x: &Point) -> Result<Point> {
        Error::check_dims(self.b.len(), x.dim())?;
        Point::new(
            self.a
                .iter()
                .zip(&self.b)
                .map(|(row, bi)| crate::point::dot(row, x) + bi)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QbneViolation {
    /// A supplied fixed point moved by more than the tolerance.
    NotFixed { index: usize, residual: f64 },
    /// `D(x, T y) > D(x, y) + tol`.
    Distance {
        fixed: usize,
        sample: usize,
        excess: f64,
    },
}

/// Checks `D(x, T y) <= D(x, y) + tol` for every supplied fixed point `x`
/// and sample `y` in the operator's domain.
pub fn qbne_check(
    f: &dyn Legendre,
    t: &dyn OracleMap,
    fixed_points: &[Point],
    samples: &[Point],
    tol: f64,
) -> Result<Vec<QbneViolation>> {
    let mut out = Vec::new();
    for (i, x) in fixed_points.iter().enumerate() {
        let residual = t.apply(x)?.distance(x);
        if residual > tol {
            out.push(QbneViolation::NotFixed { index: i, residual });
        }
    }
    for (j, y) in samples.iter().enumerate() {
        if !t.in_domain(y) {
            continue;
        }
        let ty = t.apply(y)?;
        for (i, x) in fixed_points.iter().enumerate() {
            let excess = f.distance(x, &ty)? - f.distance(x, y)?;
            if excess > tol {
                out.push(QbneViolation::Distance {
                    fixed: i,
                    sample: j,
                    excess,
                });
            }
        }
    }
    Ok(out)
}
