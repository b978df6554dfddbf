use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bregman_core::{Point, RunSummary};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn bregman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bregman"))
        .args(args)
        .env_remove("BREGMAN_LOG")
        .output()
        .expect("spawn bregman")
}

fn run_fixture(name: &str, out: &Path) -> Output {
    bregman(&[
        "run",
        "--config",
        fixture(name).to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ])
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn halving_run_then_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_fixture("halving.json", dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));

    let summary = RunSummary::read(&dir.path().join("summary.json")).unwrap();
    assert_eq!(summary.outcome, "converged");
    assert!(summary.final_point.unwrap()[0].abs() <= 1e-8);
    assert!(summary.sum_step_distance <= 0.5 + 1e-8);

    let trace = dir.path().join("trace.csv");
    let check = bregman(&["check", trace.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0), "{}", text(&check.stdout));
    assert!(text(&check.stdout).contains("0 violations"));
}

#[test]
fn expsum_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_fixture("expsum_ball.json", dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let trace = dir.path().join("trace.csv");
    let check = bregman(&["check", trace.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0), "{}", text(&check.stdout));
}

#[test]
fn corrupted_trace_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run_fixture("halving.json", dir.path()).status.code(),
        Some(0)
    );
    let trace = dir.path().join("trace.csv");
    let body = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = body.lines().map(str::to_string).collect();
    // Swap the x columns of rows 3 and 7.
    let x_of = |l: &str| l.split(',').nth(6).unwrap().to_string();
    let (x3, x7) = (x_of(&lines[4]), x_of(&lines[8]));
    for (i, x) in [(4, x7), (8, x3)] {
        let mut f: Vec<String> = lines[i].split(',').map(str::to_string).collect();
        f[6] = x;
        lines[i] = f.join(",");
    }
    fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let check = bregman(&["check", trace.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(1), "{}", text(&check.stdout));
    assert!(text(&check.stdout).contains("distance-decrease"));
}

#[test]
fn empty_and_malformed_traces() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "n,Dxn_x0,Dstep,cum,inner_sweeps,status\n").unwrap();
    let out = bregman(&["check", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stderr).contains("warning"));

    let bad = dir.path().join("bad.csv");
    fs::write(
        &bad,
        "n,Dxn_x0,Dstep,cum,inner_sweeps,status\n0,x,,0,0,step\n",
    )
    .unwrap();
    assert_eq!(
        bregman(&["check", bad.to_str().unwrap()]).status.code(),
        Some(65)
    );
}

#[test]
fn slim_check_without_context_warns() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    fs::write(
        &t,
        "n,Dxn_x0,Dstep,cum,inner_sweeps,status\n0,0,1.0e-1,1.0e-1,3,step\n1,5.0e-2,,1.0e-1,0,max-iter\n",
    )
    .unwrap();
    let out = bregman(&["check", t.to_str().unwrap()]);
    assert!(text(&out.stderr).contains("scalar columns only"));
    // The recorded step sum exceeds the growth of D(x_n, x0).
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("prefix-sum"));
}

#[test]
fn outcome_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    for (name, code) in [
        ("infeasible_box.json", 3),
        ("diverging.json", 2),
        ("max_iter.json", 4),
    ] {
        let out = run_fixture(name, &dir.path().join(name));
        assert_eq!(
            out.status.code(),
            Some(code),
            "{name}: {}",
            text(&out.stderr)
        );
    }
    let s = RunSummary::read(&dir.path().join("infeasible_box.json/summary.json")).unwrap();
    assert_eq!(s.infeasible_at, Some(0));
}

#[test]
fn max_iter_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = bregman(&[
        "run",
        "--config",
        fixture("halving.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--max-iter",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(text(&out.stdout).contains("max-iter"));
}

#[test]
fn missing_x0_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_fixture("missing_x0.json", dir.path());
    assert_eq!(out.status.code(), Some(65));
    let err = text(&out.stderr);
    assert!(err.contains("x0") && err.contains("scenario"), "{err}");
}

#[test]
fn usage_errors() {
    assert_eq!(bregman(&[]).status.code(), Some(64));
    assert_eq!(bregman(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(
        bregman(&["run", "--config", "x.json"]).status.code(),
        Some(64)
    );
    assert_eq!(bregman(&["--help"]).status.code(), Some(0));
    assert_eq!(bregman(&["--version"]).status.code(), Some(0));
}

#[test]
fn project_examples() {
    let parse =
        |out: &Output| -> serde_json::Value { serde_json::from_slice(&out.stdout).unwrap() };
    let point =
        |v: &serde_json::Value| -> Point { serde_json::from_value(v["point"].clone()).unwrap() };

    let out = bregman(&[
        "project",
        "--config",
        fixture("project_wedge.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = parse(&out);
    assert!(point(&v).distance(&Point::new(vec![1.0, 0.0]).unwrap()) <= 1e-9);
    for key in [
        "multipliers",
        "stationarity_residual",
        "max_violation",
        "complementarity_residual",
    ] {
        assert!(!v[key].is_null(), "{key}");
    }

    let out = bregman(&[
        "project",
        "--config",
        fixture("project_universal.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(point(&parse(&out)), Point::new(vec![0.25, -4.0]).unwrap());

    let out = bregman(&[
        "project",
        "--config",
        fixture("project_empty.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(parse(&out)["residual_floor"].as_f64().unwrap() > 0.0);
}
