//! Halfspaces, the cuts `H(x, y) = {z : D(z, y) <= D(z, x)}`, and the
//! accumulated polyhedral constraint system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::Legendre;
use crate::point::Point;

/// `{z : <a, z> <= b}` with `a != 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a: Point,
    pub b: f64,
}

impl Halfspace {
    pub fn new(a: Point, b: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::Domain("halfspace offset is not finite".into()));
        }
        if a.norm() == 0.0 {
            return Err(Error::Usage("halfspace normal must be nonzero".into()));
        }
        Ok(Halfspace { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `<a, z> - b`; positive outside.
    pub fn slack(&self, z: &Point) -> f64 {
        self.a.dot(z) - self.b
    }

    /// Signed Euclidean distance to the boundary hyperplane.
    pub fn signed_distance(&self, z: &Point) -> f64 {
        self.slack(z) / self.a.norm()
    }

    /// Membership with tolerance relative to `||a||`.
    pub fn contains(&self, z: &Point, tol: f64) -> bool {
        self.slack(z) <= tol * self.a.norm()
    }
}

/// A cut is either the whole space (generated by `x = y`) or a halfspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cut {
    Universal,
    Half(Halfspace),
}

impl Cut {
    pub fn halfspace(&self) -> Option<&Halfspace> {
        match self {
            Cut::Universal => None,
            Cut::Half(h) => Some(h),
        }
    }

    pub fn contains(&self, z: &Point, tol: f64) -> bool {
        self.halfspace().is_none_or(|h| h.contains(z, tol))
    }
}

/// Default `x = y` detection threshold: `1e-12 * (1 + ||x||)`.
pub fn default_tau_eq(x: &Point) -> f64 {
    1e-12 * (1.0 + x.norm())
}

/// Builds `H(x, y)`.
///
/// The normal is `grad f(x) - grad f(y)`. The offset uses the identity
/// `b = <a, x> - D(x, y)`, which equals the expanded
/// `f(y) - f(x) + <grad f(x), x> - <grad f(y), y>` but does not cancel
/// catastrophically when `x` and `y` are close.
pub fn build_cut(f: &dyn Legendre, x: &Point, y: &Point, tau_eq: f64) -> Result<Cut> {
    Error::check_dims(x.dim(), y.dim())?;
    if x.sub(y).norm() <= tau_eq {
        return Ok(Cut::Universal);
    }
    let gx = f.grad(x)?;
    let gy = f.grad(y)?;
    let a = gx.sub(&gy);
    if !a.is_finite() {
        return Err(Error::Domain(
            "non-finite gradient while building a cut".into(),
        ));
    }
    if a.norm() == 0.0 {
        // Strict convexity rules this out above tau_eq; seen only when the
        // gradient difference underflows.
        return Ok(Cut::Universal);
    }
    let b = a.dot(x) - f.distance(x, y)?;
    if !b.is_finite() {
        return Err(Error::Domain("non-finite cut offset".into()));
    }
    Ok(Cut::Half(Halfspace { a, b }))
}

/// Compares `D(z, y) <= D(z, x)` against the linear test of [`build_cut`].
///
/// Both sides are evaluated with slack `rel_tol * (1 + |D(z, x)| + |D(z, y)|)`
/// so that points on the boundary are not reported as disagreements.
pub fn cut_membership_equiv(
    f: &dyn Legendre,
    x: &Point,
    y: &Point,
    z: &Point,
    rel_tol: f64,
) -> Result<bool> {
    let cut = build_cut(f, x, y, 0.0)?;
    let h = match cut {
        Cut::Universal => return Ok(true),
        Cut::Half(h) => h,
    };
    let dzx = f.distance(z, x)?;
    let dzy = f.distance(z, y)?;
    // Exactly: D(z, y) - D(z, x) = <a, z> - b.
    let gap = dzy - dzx;
    let slack = h.slack(z);
    let scale = 1.0 + dzx.abs() + dzy.abs() + h.b.abs() + h.a.norm() * z.norm();
    if gap.abs() <= rel_tol * scale || slack.abs() <= rel_tol * scale {
        return Ok((gap - slack).abs() <= rel_tol * scale);
    }
    Ok((gap <= 0.0) == (slack <= 0.0))
}

/// `C_n`: a polyhedral base `C_0` intersected with every cut appended so far.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutSet {
    pub base: Vec<Halfspace>,
    pub cuts: Vec<Cut>,
    /// Drop a new cut when an identical halfspace is already present.
    #[serde(default)]
    pub prune_duplicates: bool,
}

impl CutSet {
    /// `C_0 = X`.
    pub fn universal() -> Self {
        CutSet::default()
    }

    pub fn from_halfspaces(base: Vec<Halfspace>) -> Self {
        CutSet {
            base,
            ..CutSet::default()
        }
    }

    /// `[lo_i, hi_i]` per coordinate, as `2 * dim` halfspaces.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Error::check_dims(lo.len(), hi.len())?;
        let dim = lo.len();
        let mut base = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            if !(lo[i] <= hi[i]) {
                return Err(Error::Usage(format!("box: lo[{i}] > hi[{i}]")));
            }
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            base.push(Halfspace::new(Point::new(e.clone())?, hi[i])?);
            e[i] = -1.0;
            base.push(Halfspace::new(Point::new(e)?, -lo[i])?);
        }
        Ok(CutSet::from_halfspaces(base))
    }

    /// Appends a cut. Returns `false` if it was pruned as a duplicate.
    pub fn push(&mut self, cut: Cut) -> bool {
        if self.prune_duplicates {
            if let Cut::Half(h) = &cut {
                if self.halfspaces().any(|g| g == h) {
                    return false;
                }
            }
        }
        self.cuts.push(cut);
        true
    }

    /// Base rows followed by non-universal cuts, in insertion order.
    pub fn halfspaces(&self) -> impl Iterator<Item = &Halfspace> {
        self.base
            .iter()
            .chain(self.cuts.iter().filter_map(Cut::halfspace))
    }

    pub fn num_halfspaces(&self) -> usize {
        self.halfspaces().count()
    }

    /// The set after only the first `n` cuts, i.e. `C_n` of a run.
    pub fn prefix(&self, n: usize) -> CutSet {
        CutSet {
            base: self.base.clone(),
            cuts: self.cuts[..n.min(self.cuts.len())].to_vec(),
            prune_duplicates: self.prune_duplicates,
        }
    }

    pub fn contains(&self, z: &Point, tol: f64) -> bool {
        self.halfspaces().all(|h| h.contains(z, tol))
    }

    /// Largest normalized violation `max(0, (<a, z> - b) / ||a||)`.
    pub fn max_violation(&self, z: &Point) -> f64 {
        self.halfspaces()
            .map(|h| h.signed_distance(z))
            .fold(0.0, f64::max)
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        for h in self.halfspaces() {
            Error::check_dims(dim, h.dim())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::{Energy, ExpSum};
    use crate::pt;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn equal_points_give_universal_cut() {
        let x = pt![1, 1];
        assert_eq!(
            build_cut(&Energy, &x, &x, default_tau_eq(&x)).unwrap(),
            Cut::Universal
        );
    }

    #[test]
    fn energy_cut_is_perpendicular_bisector() {
        let cut = build_cut(&Energy, &pt![1, 0], &pt![0, 0], 1e-12).unwrap();
        let h = cut.halfspace().unwrap();
        assert_eq!(h.a, pt![1, 0]);
        assert_abs_diff_eq!(h.b, 0.5, epsilon = 1e-15);
        // Expanding the squares: D(z,y) <= D(z,x)  <=>  z1 <= 1/2.
        for z1 in [-1.0, 0.49, 0.5, 0.51, 3.0] {
            let z = pt![z1, 7.0];
            let by_distance = Energy.distance(&z, &pt![0, 0]).unwrap()
                <= Energy.distance(&z, &pt![1, 0]).unwrap();
            assert_eq!(by_distance, z1 <= 0.5);
            assert_eq!(h.contains(&z, 0.0), z1 <= 0.5);
        }
    }

    #[test]
    fn expsum_cut_matches_hand_substitution() {
        let cut = build_cut(&ExpSum, &pt![1], &pt![0], 1e-12).unwrap();
        let h = cut.halfspace().unwrap();
        assert_abs_diff_eq!(h.a[0], E - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.b, 1.0, epsilon = 1e-15);
        // Grid cross-check against the distance definition.
        let threshold = 1.0 / (E - 1.0);
        for k in -300..=300 {
            let z = k as f64 / 100.0;
            if (z - threshold).abs() < 1e-9 {
                continue;
            }
            let zp = pt![z];
            let by_distance =
                ExpSum.distance(&zp, &pt![0]).unwrap() <= ExpSum.distance(&zp, &pt![1]).unwrap();
            assert_eq!(by_distance, z <= threshold, "z = {z}");
        }
    }

    #[test]
    fn contains_examples() {
        assert!(CutSet::universal().contains(&pt![1e9, -3], 0.0));
        let cs = CutSet::from_halfspaces(vec![Halfspace::new(pt![1, 0], 0.5).unwrap()]);
        assert!(cs.contains(&pt![0.4, 7], 1e-9));
        assert!(!cs.contains(&pt![0.6, 0], 1e-9));
    }

    #[test]
    fn membership_equivalence_examples() {
        let (x, y) = (pt![1, 0], pt![0, 0]);
        assert!(cut_membership_equiv(&Energy, &x, &y, &pt![0, 0], 1e-9).unwrap());
        assert!(cut_membership_equiv(&Energy, &x, &y, &pt![1, 0], 1e-9).unwrap());
    }

    #[test]
    fn box_expands_to_two_rows_per_axis() {
        let cs = CutSet::from_box(&[0.0, -1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(cs.num_halfspaces(), 4);
        assert!(cs.contains(&pt![0.5, 2.0], 0.0));
        assert!(!cs.contains(&pt![1.5, 0.0], 1e-9));
        assert!(CutSet::from_box(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn duplicate_pruning_is_opt_in() {
        let h = Halfspace::new(pt![1], 1.0).unwrap();
        let mut cs = CutSet::universal();
        assert!(cs.push(Cut::Half(h.clone())));
        assert!(cs.push(Cut::Half(h.clone())));
        assert_eq!(cs.cuts.len(), 2);
        cs.prune_duplicates = true;
        assert!(!cs.push(Cut::Half(h)));
        assert_eq!(cs.cuts.len(), 2);
    }

    #[test]
    fn prefix_sets_are_nested() {
        let mut cs = CutSet::from_box(&[-2.0], &[2.0]).unwrap();
        cs.push(Cut::Half(Halfspace::new(pt![1], 1.0).unwrap()));
        cs.push(Cut::Universal);
        cs.push(Cut::Half(Halfspace::new(pt![-1], 0.5).unwrap()));
        for n in 0..cs.cuts.len() {
            let (outer, inner) = (cs.prefix(n), cs.prefix(n + 1));
            // Constraint lists are prefixes of one another.
            let outer_rows: Vec<_> = outer.halfspaces().collect();
            let inner_rows: Vec<_> = inner.halfspaces().collect();
            assert_eq!(&inner_rows[..outer_rows.len()], &outer_rows[..]);
            for k in -30..=30 {
                let z = pt![k as f64 / 10.0];
                if inner.contains(&z, 0.0) {
                    assert!(outer.contains(&z, 0.0));
                }
            }
        }
    }

    fn triple(dim: usize) -> impl Strategy<Value = (Point, Point, Vec<Point>)> {
        let p =
            move || prop::collection::vec(-3.0..3.0_f64, dim).prop_map(|v| Point::new(v).unwrap());
        (p(), p(), prop::collection::vec(p(), 50))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn cut_agrees_with_distance_comparison(
            (x, y, zs) in (1usize..4).prop_flat_map(triple)
        ) {
            prop_assume!(x.sub(&y).norm() > 1e-6);
            for f in [&Energy as &dyn Legendre, &ExpSum] {
                for z in &zs {
                    prop_assert!(cut_membership_equiv(f, &x, &y, z, 1e-9).unwrap());
                }
                // y always lies in its own cut.
                let cut = build_cut(f, &x, &y, default_tau_eq(&x)).unwrap();
                prop_assert!(cut.contains(&y, 1e-12));
                prop_assert!(!cut.contains(&x, 0.0));
            }
        }
    }
}
