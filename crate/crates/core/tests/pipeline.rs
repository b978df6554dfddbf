use bregman_core::driver::{verify_rows, Run};
use bregman_core::trace_io::{read_trace_csv, write_trace_csv};
use bregman_core::{
    project_cutset, run, verify_trace, CutSet, ExpSum, Halfspace, InnerMethod, InnerSettings,
    Outcome, Point, Projection, ScenarioConfig,
};
use proptest::prelude::*;

const EXPSUM_BALL: &str = r#"{
  "scenario": {"name": "expsum-ball", "dim": 2, "x0": [2.0, -1.5], "max_iter": 500},
  "legendre": "expsum",
  "set": {"box": [[-3.0, 3.0], [-3.0, 3.0]]},
  "operator": {"kind": "subgrad", "g": {"type": "ball", "center": [0.5, 0.0], "radius": 1.0}},
  "tolerances": {"eps_fix": 1e-7, "eps_step": 1e-12}
}"#;

fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).unwrap()
}

#[test]
fn scenario_runs_and_its_trace_survives_a_round_trip() {
    let s = ScenarioConfig::from_json_str(EXPSUM_BALL).unwrap();
    let f = s.legendre().unwrap();
    let oracle = s.oracle(f.clone()).unwrap();
    let cfg = s.driver_config().unwrap();
    let trace = run(f.as_ref(), oracle.as_ref(), &cfg).unwrap();

    let Outcome::Converged { point, .. } = &trace.outcome else {
        panic!("outcome {}", trace.outcome.label());
    };
    let ball = s.fixed_point_set().unwrap().unwrap();
    assert!(ball.contains(point, 1e-6).unwrap());
    assert!(verify_trace(f.as_ref(), &trace, 1e-8).unwrap().is_empty());

    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf).unwrap();
    let table = read_trace_csv(buf.as_slice()).unwrap();
    let v = verify_rows(
        f.as_ref(),
        &trace.x0,
        &trace.base,
        trace.tau_eq,
        &table.rows,
        1e-8,
    )
    .unwrap();
    assert!(v.is_empty(), "{v:?}");
}

#[test]
fn stepping_matches_a_full_run() {
    let s = ScenarioConfig::from_json_str(EXPSUM_BALL).unwrap();
    let f = s.legendre().unwrap();
    let oracle = s.oracle(f.clone()).unwrap();
    let cfg = s.driver_config().unwrap();
    let whole = run(f.as_ref(), oracle.as_ref(), &cfg).unwrap();

    let mut r = Run::new(f.as_ref(), oracle.as_ref(), &cfg).unwrap();
    while r.step().unwrap().is_none() {}
    let stepped = r.into_trace();
    assert_eq!(stepped.rows.len(), whole.rows.len());
    assert_eq!(stepped.points().last(), whole.points().last());
}

#[test]
fn expsum_projection_far_below_the_anchor() {
    // The answer sits near exp(-27.7); the multiplier curve cancels there.
    let h = Halfspace::new(pt(&[0.020515389544933704]), -0.568976556971433).unwrap();
    let cs = CutSet::from_halfspaces(vec![h.clone()]);
    let x0 = pt(&[-1.3445219155340207]);
    let Projection::Solved(r) =
        project_cutset(&ExpSum, &cs, &x0, &InnerSettings::default()).unwrap()
    else {
        panic!("infeasible");
    };
    let exact = h.b / h.a[0];
    assert!(
        (r.point[0] - exact).abs() <= 1e-9 * exact.abs(),
        "{} vs {exact}",
        r.point[0]
    );
}

fn polytope() -> impl Strategy<Value = (Vec<(f64, f64, f64)>, f64, f64)> {
    (
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, 0.2..1.5f64), 1..6),
        -2.5..2.5f64,
        -2.5..2.5f64,
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, rng_seed: proptest::test_runner::RngSeed::Fixed(7), ..ProptestConfig::default() })]

    #[test]
    fn inner_methods_agree((rows, x, y) in polytope()) {
        // Every row has positive offset, so the origin is strictly feasible.
        let hs: Vec<Halfspace> = rows
            .iter()
            .filter(|(a, b, _)| a.hypot(*b) > 0.05)
            .map(|&(a, b, c)| Halfspace::new(pt(&[a, b]), c).unwrap())
            .collect();
        prop_assume!(!hs.is_empty());
        let cs = CutSet::from_halfspaces(hs);
        let x0 = pt(&[x, y]);
        let mut points = Vec::new();
        for method in [InnerMethod::InteriorPoint, InnerMethod::CoordinateAscent] {
            let settings = InnerSettings { method, ..InnerSettings::default() };
            match project_cutset(&ExpSum, &cs, &x0, &settings).unwrap() {
                Projection::Solved(r) => points.push(r.point),
                Projection::Infeasible(_) => prop_assert!(false, "feasible set reported empty"),
            }
        }
        prop_assert!(points[0].distance(&points[1]) <= 1e-7, "{:?}", points);
    }
}
