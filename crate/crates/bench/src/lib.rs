//! Fixtures shared by the benchmarks.

use bregman_core::operators::{LevelFunction, SubgradientProjector};
use bregman_core::{CutSet, DriverConfig, Energy, ExpSum, Halfspace, Legendre, Point};
use std::sync::Arc;

/// `m` tangent halfspaces of the unit ball in the plane, plus the point
/// `(3, 3)` to project.
pub fn polygon(m: usize) -> (CutSet, Point) {
    let rows = (0..m)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / m as f64;
            Halfspace::new(Point::new(vec![t.cos(), t.sin()]).unwrap(), 1.0).unwrap()
        })
        .collect();
    (
        CutSet::from_halfspaces(rows),
        Point::new(vec![3.0, 3.0]).unwrap(),
    )
}

/// Subgradient projector onto a ball of radius 1 centered at `(1, 1, 1)`.
pub fn ball_scenario(f: Arc<dyn Legendre>) -> (SubgradientProjector, DriverConfig) {
    let g = LevelFunction::Ball {
        center: Some(Point::new(vec![1.0, 1.0, 1.0]).unwrap()),
        radius: 1.0,
    };
    let oracle = SubgradientProjector { f, g: Arc::new(g) };
    let mut cfg = DriverConfig::new(
        Point::new(vec![-1.0, 3.0, 0.5]).unwrap(),
        CutSet::universal(),
    );
    cfg.max_iter = 200;
    cfg.eps_fix = 1e-6;
    cfg.eps_step = 1e-10;
    (oracle, cfg)
}

pub fn legendre_instances() -> [(&'static str, Arc<dyn Legendre>); 2] {
    [("energy", Arc::new(Energy)), ("expsum", Arc::new(ExpSum))]
}
