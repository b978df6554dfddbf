//! Declarative scenario files (JSON) and their translation into a driver
//! configuration, a Legendre instance and an oracle.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::driver::{DriverConfig, OracleMap};
use crate::error::{Error, Result};
use crate::legendre::{legendre_by_name, Legendre};
use crate::operators::{
    AffineMap, ClassicalSubgradientProjector, ConvexSet, DistancePowerProjector, LevelFunction,
    LevelSetProblem, MoreauProjector, Projector, ProxFunction, SubgradientProjector,
};
use crate::point::Point;
use crate::projection::InnerSettings;
use crate::sets::{CutSet, Halfspace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Header,
    pub legendre: String,
    #[serde(default)]
    pub set: SetSpec,
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub name: String,
    pub dim: usize,
    pub x0: Point,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_max_iter() -> usize {
    1000
}

/// `"universal"`, a list of `{a, b}` rows, `{"box": [[lo, hi], ...]}` or
/// `{"ball": {"center": [...], "radius": r}}` (operator sets only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetSpec {
    Named(String),
    Rows(Vec<Halfspace>),
    Box {
        #[serde(rename = "box")]
        bounds: Vec<[f64; 2]>,
    },
    Ball {
        ball: BallSpec,
    },
}

impl Default for SetSpec {
    fn default() -> Self {
        SetSpec::Named("universal".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
}

impl SetSpec {
    pub fn to_convex(&self, dim: usize, path: &str) -> Result<ConvexSet> {
        let set = match self {
            SetSpec::Named(name) if name == "universal" => ConvexSet::Universal,
            SetSpec::Named(name) => {
                return Err(Error::config(
                    path,
                    format!("unknown set `{name}`; expected \"universal\""),
                ))
            }
            SetSpec::Rows(rows) => {
                if rows.is_empty() {
                    ConvexSet::Universal
                } else {
                    ConvexSet::Halfspaces(rows.clone())
                }
            }
            SetSpec::Box { bounds } => {
                let lo: Vec<f64> = bounds.iter().map(|b| b[0]).collect();
                let hi: Vec<f64> = bounds.iter().map(|b| b[1]).collect();
                if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
                    return Err(Error::config(
                        format!("{path}.box[{i}]"),
                        "lower bound exceeds upper bound",
                    ));
                }
                ConvexSet::Box { lo, hi }
            }
            SetSpec::Ball { ball } => {
                if !(ball.radius >= 0.0) {
                    return Err(Error::config(
                        format!("{path}.ball.radius"),
                        "must be nonnegative",
                    ));
                }
                ConvexSet::Ball {
                    center: ball.center.clone(),
                    radius: ball.radius,
                }
            }
        };
        if let Some(d) = set.dim() {
            if d != dim {
                return Err(Error::config(
                    path,
                    format!("set has dimension {d}, scenario has {dim}"),
                ));
            }
        }
        if let ConvexSet::Halfspaces(rows) = &set {
            if let Some(i) = rows.iter().position(|h| h.dim() != dim) {
                return Err(Error::config(
                    format!("{path}[{i}].a"),
                    format!("expected {dim} coordinates"),
                ));
            }
        }
        Ok(set)
    }

    pub fn to_cutset(&self, dim: usize, path: &str) -> Result<CutSet> {
        self.to_convex(dim, path)?.to_cutset()?.ok_or_else(|| {
            Error::config(
                path,
                "a ball is not polyhedral; only operator sets may be balls",
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    Subgrad {
        g: LevelFunction,
    },
    ClassicalSubgrad {
        g: LevelFunction,
    },
    Distpow {
        set: SetSpec,
        p: f64,
    },
    Moreau {
        h: ProxSpec,
    },
    AffineMap {
        #[serde(rename = "A", alias = "a")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Projector {
        set: SetSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProxSpec {
    Affine {
        a: Point,
        b: f64,
    },
    Ball {
        #[serde(default)]
        center: Option<Point>,
        radius: f64,
    },
    AbsNorm {
        #[serde(default)]
        center: Option<Point>,
        radius: f64,
    },
    Indicator {
        set: SetSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub eps_step: f64,
    pub eps_fix: f64,
    pub divergence_radius: Option<f64>,
    pub tau_eq: Option<f64>,
    pub prune_duplicates: bool,
    pub inner: InnerSettings,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_step: 1e-8,
            eps_fix: 1e-8,
            divergence_radius: None,
            tau_eq: None,
            prune_duplicates: false,
            inner: InnerSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub trace: String,
    pub summary: String,
    pub slim: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            trace: "trace.csv".into(),
            summary: "summary.json".into(),
            slim: false,
        }
    }
}

impl ScenarioConfig {
    /// Parses and validates. Errors carry the JSON path of the offending field.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn dim(&self) -> usize {
        self.scenario.dim
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.scenario.dim;
        if dim == 0 {
            return Err(Error::config("scenario.dim", "must be at least 1"));
        }
        if self.scenario.x0.dim() != dim {
            return Err(Error::config(
                "scenario.x0",
                format!(
                    "has {} coordinates, scenario.dim is {dim}",
                    self.scenario.x0.dim()
                ),
            ));
        }
        if self.scenario.max_iter == 0 {
            return Err(Error::config("scenario.max_iter", "must be at least 1"));
        }
        let f = self.legendre()?;
        f.grad(&self.scenario.x0)
            .map_err(|e| Error::config("scenario.x0", e.to_string()))?;
        self.cutset()?;
        if self.operator.is_some() {
            self.oracle(f)?;
        }
        self.driver_config()?.validate().map_err(|e| match e {
            Error::Config { path, message } => Error::Config {
                path: qualify(&path),
                message,
            },
            other => other,
        })
    }

    pub fn legendre(&self) -> Result<Arc<dyn Legendre>> {
        legendre_by_name(&self.legendre).ok_or_else(|| {
            Error::config(
                "legendre",
                format!(
                    "unknown Legendre function `{}`; expected \"energy\" or \"expsum\"",
                    self.legendre
                ),
            )
        })
    }

    pub fn cutset(&self) -> Result<CutSet> {
        let mut cs = self.set.to_cutset(self.dim(), "set")?;
        cs.prune_duplicates = self.tolerances.prune_duplicates;
        Ok(cs)
    }

    /// The level function of subgradient-projector scenarios.
    pub fn level_function(&self) -> Option<&LevelFunction> {
        match &self.operator {
            Some(OperatorSpec::Subgrad { g } | OperatorSpec::ClassicalSubgrad { g }) => Some(g),
            _ => None,
        }
    }

    /// `Fix T` when it has a closed form.
    pub fn fixed_point_set(&self) -> Result<Option<ConvexSet>> {
        let dim = self.dim();
        Ok(match &self.operator {
            Some(OperatorSpec::Subgrad { g } | OperatorSpec::ClassicalSubgrad { g }) => {
                g.level_set()
            }
            Some(OperatorSpec::Distpow { set, .. } | OperatorSpec::Projector { set }) => {
                Some(set.to_convex(dim, "operator.set")?)
            }
            Some(OperatorSpec::Moreau {
                h: ProxSpec::Indicator { set },
            }) => Some(set.to_convex(dim, "operator.h.set")?),
            _ => None,
        })
    }

    pub fn oracle(&self, f: Arc<dyn Legendre>) -> Result<Box<dyn OracleMap>> {
        let dim = self.dim();
        let spec = self
            .operator
            .as_ref()
            .ok_or_else(|| Error::config("operator", "missing field `operator`"))?;
        let level = |g: &LevelFunction| -> Result<Arc<dyn LevelSetProblem>> {
            g.validate(dim)
                .map_err(|e| Error::config("operator.g", e.to_string()))?;
            Ok(Arc::new(g.clone()))
        };
        Ok(match spec {
            OperatorSpec::Subgrad { g } => Box::new(SubgradientProjector { f, g: level(g)? }),
            OperatorSpec::ClassicalSubgrad { g } => {
                if f.name() != "energy" {
                    return Err(Error::config(
                        "operator.kind",
                        "classical-subgrad is the Energy specialization; use \"subgrad\" with other Legendre functions",
                    ));
                }
                Box::new(ClassicalSubgradientProjector { g: level(g)? })
            }
            OperatorSpec::Distpow { set, p } => {
                if !(*p >= 1.0) {
                    return Err(Error::config("operator.p", "must be >= 1"));
                }
                Box::new(DistancePowerProjector {
                    set: set.to_convex(dim, "operator.set")?,
                    p: *p,
                })
            }
            OperatorSpec::Moreau { h } => {
                let prox = match h.clone() {
                    ProxSpec::Affine { a, b } => ProxFunction::Affine { a, b },
                    ProxSpec::Ball { center, radius } => ProxFunction::Ball { center, radius },
                    ProxSpec::AbsNorm { center, radius } => {
                        ProxFunction::AbsNorm { center, radius }
                    }
                    ProxSpec::Indicator { set } => {
                        ProxFunction::Indicator(set.to_convex(dim, "operator.h.set")?)
                    }
                };
                let centre_dim = match &prox {
                    ProxFunction::Affine { a, .. } => Some(a.dim()),
                    ProxFunction::Ball { center, .. } | ProxFunction::AbsNorm { center, .. } => {
                        center.as_ref().map(Point::dim)
                    }
                    ProxFunction::Indicator(_) => None,
                };
                if centre_dim.is_some_and(|d| d != dim) {
                    return Err(Error::config(
                        "operator.h",
                        format!("expected dimension {dim}"),
                    ));
                }
                Box::new(MoreauProjector { h: Arc::new(prox) })
            }
            OperatorSpec::AffineMap { a, b } => Box::new(
                AffineMap::new(a.clone(), b.clone())
                    .and_then(|m| {
                        Error::check_dims(dim, m.b.len())?;
                        Ok(m)
                    })
                    .map_err(|e| Error::config("operator.A", e.to_string()))?,
            ),
            OperatorSpec::Projector { set } => Box::new(Projector {
                set: set.to_convex(dim, "operator.set")?,
            }),
        })
    }

    pub fn driver_config(&self) -> Result<DriverConfig> {
        let t = &self.tolerances;
        let mut cfg = DriverConfig::new(self.scenario.x0.clone(), self.cutset()?);
        cfg.eps_step = t.eps_step;
        cfg.eps_fix = t.eps_fix;
        cfg.max_iter = self.scenario.max_iter;
        cfg.divergence_radius = t.divergence_radius;
        cfg.tau_eq = t.tau_eq;
        cfg.inner = t.inner.clone();
        cfg.slim = self.output.slim;
        Ok(cfg)
    }
}

/// Maps a bare field name from driver validation to its place in the file.
fn qualify(field: &str) -> String {
    const INNER: [&str; 7] = [
        "kkt_tol",
        "feas_tol",
        "comp_tol",
        "lambda_cap",
        "max_sweeps",
        "stall_window",
        "infeasibility_radius",
    ];
    if INNER.contains(&field) {
        format!("tolerances.inner.{field}")
    } else if field == "max_iter" {
        "scenario.max_iter".into()
    } else {
        format!("tolerances.{field}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALVING: &str = r#"{
        "scenario": {"name": "halving", "dim": 1, "x0": [1.0], "max_iter": 100},
        "legendre": "energy",
        "set": "universal",
        "operator": {"kind": "projector", "set": [{"a": [1.0], "b": 0.0}]},
        "tolerances": {"eps_fix": 1e-9}
    }"#;

    #[test]
    fn parses_halving() {
        let cfg = ScenarioConfig::from_json_str(HALVING).unwrap();
        assert_eq!(cfg.scenario.max_iter, 100);
        assert_eq!(cfg.tolerances.eps_fix, 1e-9);
        assert_eq!(cfg.tolerances.eps_step, 1e-8);
        let f = cfg.legendre().unwrap();
        let t = crate::driver::run(
            f.as_ref(),
            cfg.oracle(f.clone()).unwrap().as_ref(),
            &cfg.driver_config().unwrap(),
        )
        .unwrap();
        assert_eq!(t.outcome.exit_code(), 0);
    }

    fn err_path(text: &str) -> (String, String) {
        match ScenarioConfig::from_json_str(text) {
            Err(Error::Config { path, message }) => (path, message),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_x0_is_named() {
        let (path, msg) =
            err_path(r#"{"scenario": {"name": "s", "dim": 1}, "legendre": "energy"}"#);
        assert!(format!("{path} {msg}").contains("x0"), "{path}: {msg}");
    }

    #[test]
    fn validation_paths() {
        let (path, _) =
            err_path(r#"{"scenario": {"name": "s", "dim": 2, "x0": [1]}, "legendre": "energy"}"#);
        assert_eq!(path, "scenario.x0");
        let (path, _) =
            err_path(r#"{"scenario": {"name": "s", "dim": 1, "x0": [1]}, "legendre": "cosh"}"#);
        assert_eq!(path, "legendre");
        let (path, _) = err_path(
            r#"{"scenario": {"name": "s", "dim": 1, "x0": [1]}, "legendre": "energy", "tolerances": {"eps_fix": -1}}"#,
        );
        assert_eq!(path, "tolerances.eps_fix");
        let (path, _) = err_path(
            r#"{"scenario": {"name": "s", "dim": 1, "x0": [1]}, "legendre": "energy", "tolerances": {"inner": {"kkt_tol": 0}}}"#,
        );
        assert_eq!(path, "tolerances.inner.kkt_tol");
        let (path, _) = err_path(
            r#"{"scenario": {"name": "s", "dim": 1, "x0": [1]}, "legendre": "energy", "set": {"ball": {"center": [0], "radius": 1}}}"#,
        );
        assert_eq!(path, "set");
        let (path, _) = err_path(
            r#"{"scenario": {"name": "s", "dim": 1, "x0": [1]}, "legendre": "energy",
                "operator": {"kind": "subgrad", "g": {"type": "ball", "radius": 1, "colour": 3}}}"#,
        );
        assert!(path.starts_with("operator"), "{path}");
        let (path, _) = err_path(
            r#"{"scenario": {"name": "s", "dim": 1, "x0": [1]}, "legendre": "expsum",
                "operator": {"kind": "classical-subgrad", "g": {"type": "ball", "radius": 1}}}"#,
        );
        assert_eq!(path, "operator.kind");
    }

    #[test]
    fn set_forms() {
        let b: SetSpec = serde_json::from_str(r#"{"box": [[0, 1], [-1, 2]]}"#).unwrap();
        assert_eq!(b.to_cutset(2, "set").unwrap().num_halfspaces(), 4);
        let r: SetSpec = serde_json::from_str(r#"[{"a": [1, 1], "b": 1}]"#).unwrap();
        assert_eq!(r.to_cutset(2, "set").unwrap().num_halfspaces(), 1);
        assert!(r.to_cutset(3, "set").is_err());
        let u: SetSpec = serde_json::from_str(r#""universal""#).unwrap();
        assert_eq!(u.to_cutset(5, "set").unwrap().num_halfspaces(), 0);
    }

    #[test]
    fn every_operator_kind_builds() {
        let ops = [
            r#"{"kind": "subgrad", "g": {"type": "abs-norm", "radius": 1}}"#,
            r#"{"kind": "classical-subgrad", "g": {"type": "affine", "a": [1, 0], "b": 1}}"#,
            r#"{"kind": "distpow", "set": {"box": [[0, 1], [0, 1]]}, "p": 3}"#,
            r#"{"kind": "moreau", "h": {"type": "indicator", "set": {"ball": {"center": [0, 0], "radius": 1}}}}"#,
            r#"{"kind": "affine-map", "A": [[1, 0], [0, 1]], "b": [2, 0]}"#,
            r#"{"kind": "projector", "set": [{"a": [0, 1], "b": 0}]}"#,
        ];
        for op in ops {
            let text = format!(
                r#"{{"scenario": {{"name": "s", "dim": 2, "x0": [1, 1]}}, "legendre": "energy", "operator": {op}}}"#
            );
            let cfg = ScenarioConfig::from_json_str(&text).unwrap_or_else(|e| panic!("{op}: {e}"));
            let y = cfg
                .oracle(cfg.legendre().unwrap())
                .unwrap()
                .apply(&cfg.scenario.x0)
                .unwrap();
            assert_eq!(y.dim(), 2);
        }
    }
}
