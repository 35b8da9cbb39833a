//! End-to-end subcommand tests against the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_restoration"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const CHAIN4_FEEDER: &str = r#"{
  "name": "chain4",
  "source": 1,
  "edges": [
    { "from": 1, "to": 2, "length_ft": 10 },
    { "from": 2, "to": 3, "length_ft": 10 },
    { "from": 3, "to": 4, "length_ft": 10 }
  ]
}"#;

const CHAIN4_SCENARIO: &str = r#"{
  "network": {
    "source": 1,
    "lines": [
      { "u": 1, "v": 2, "length_ft": 10, "damaged": false },
      { "u": 2, "v": 3, "length_ft": 10, "damaged": false },
      { "u": 3, "v": 4, "length_ft": 10, "damaged": false }
    ]
  },
  "windows": [
    { "duration_min": 30.0, "crew_budgets_min": [30.0] },
    { "duration_min": 50.0, "crew_budgets_min": [50.0] }
  ],
  "arrivals": [
    { "window": 1, "from": 1, "to": 2, "estimate_min": 30.0, "reward": 1.0 },
    { "window": 1, "from": 2, "to": 3, "estimate_min": 30.0, "reward": 1.0 },
    { "window": 1, "from": 3, "to": 4, "estimate_min": 20.0, "reward": 1.0 }
  ]
}"#;

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn transform_dumps_working_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let feeder = write(dir.path(), "chain4.json", CHAIN4_FEEDER);
    let out = run(&[
        "transform",
        "--feeder",
        feeder.to_str().unwrap(),
        "--speed",
        "inf",
        "--repair-times",
        "30,30,20",
    ]);
    assert!(out.status.success());
    let dump: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(dump["node_count"], 4);
    assert_eq!(dump["precedence"].as_array().unwrap().len(), 3);
    assert_eq!(dump["jobs"][2]["repair_min"], 20.0);
}

#[test]
fn transform_rejects_missing_feeder() {
    let out = run(&["transform", "--feeder", "/nonexistent/feeder.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_reproduces_chain_cases_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let feeder = write(dir.path(), "chain4.json", CHAIN4_FEEDER);
    let f = feeder.to_str().unwrap();

    let out = run(&[
        "solve", "--feeder", f, "--speed", "inf", "--repair-times", "30,30,20", "--crews", "1",
        "--budgets", "30", "--window", "480",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("aggregate reward: 1"));

    let out = run(&[
        "solve", "--feeder", f, "--speed", "inf", "--repair-times", "30,30,20", "--crews", "2",
        "--budgets", "30,20", "--window", "480",
    ]);
    assert_eq!(out.status.code(), Some(3), "strict two-crew case is infeasible");

    let out = run(&[
        "solve", "--feeder", f, "--speed", "inf", "--repair-times", "30,30,20", "--crews", "2",
        "--budgets", "30,20", "--window", "480", "--mode", "relaxed",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("aggregate reward: 1"));
}

#[test]
fn solve_exports_models_and_solution_json() {
    let dir = tempfile::tempdir().unwrap();
    let feeder = write(dir.path(), "chain4.json", CHAIN4_FEEDER);
    let mps = dir.path().join("model.mps");
    let lp = dir.path().join("model.lp");
    let sol = dir.path().join("solution.json");
    let out = run(&[
        "solve",
        "--feeder",
        feeder.to_str().unwrap(),
        "--speed",
        "inf",
        "--repair-times",
        "30,30,20",
        "--crews",
        "1",
        "--budgets",
        "30",
        "--window",
        "480",
        "--export-mps",
        mps.to_str().unwrap(),
        "--export-lp",
        lp.to_str().unwrap(),
        "--out",
        sol.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mps_text = std::fs::read_to_string(&mps).unwrap();
    assert!(mps_text.starts_with("NAME chain4"));
    assert!(mps_text.contains("'INTORG'"));
    assert!(std::fs::read_to_string(&lp).unwrap().starts_with("Maximize"));
    let solution: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    assert_eq!(solution["status"], "optimal");
    assert_eq!(solution["aggregate_reward"], 1.0);
    assert_eq!(solution["tours"][0][0], serde_json::json!([1, 2]));
}

#[test]
fn solve_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let feeder = write(dir.path(), "chain4.json", CHAIN4_FEEDER);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let res = run(&[
            "solve",
            "--feeder",
            feeder.to_str().unwrap(),
            "--speed",
            "inf",
            "--repair-times",
            "30,30,20",
            "--crews",
            "3",
            "--budgets",
            "30,20,30",
            "--window",
            "480",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(res.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn limit_without_incumbent_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let feeder = write(dir.path(), "chain4.json", CHAIN4_FEEDER);
    let out = run(&[
        "solve",
        "--feeder",
        feeder.to_str().unwrap(),
        "--speed",
        "inf",
        "--repair-times",
        "30,30,20",
        "--crews",
        "1",
        "--budgets",
        "30",
        "--node-limit",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn simulate_reports_cumulative_rewards() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "scenario.json", CHAIN4_SCENARIO);
    let out = run(&["simulate", "--scenario", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,") && lines[1].ends_with(",1.000000"));
    assert!(lines[2].starts_with("2,") && lines[2].ends_with(",3.000000"));
}

#[test]
fn simulate_empty_scenario_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let empty = CHAIN4_SCENARIO.replace(
        r#""windows": [
    { "duration_min": 30.0, "crew_budgets_min": [30.0] },
    { "duration_min": 50.0, "crew_budgets_min": [50.0] }
  ],"#,
        r#""windows": [],"#,
    );
    let scenario = write(dir.path(), "empty.json", &empty);
    let out = run(&["simulate", "--scenario", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn simulate_overrun_reports_carried_job() {
    let dir = tempfile::tempdir().unwrap();
    let overrun = r#"{
  "network": {
    "source": 1,
    "lines": [ { "u": 1, "v": 2, "length_ft": 10, "damaged": false } ]
  },
  "windows": [ { "duration_min": 40.0, "crew_budgets_min": [40.0] } ],
  "arrivals": [
    { "window": 1, "from": 1, "to": 2, "estimate_min": 30.0, "reward": 1.0, "actual_min": 45.0 }
  ]
}"#;
    let scenario = write(dir.path(), "overrun.json", overrun);
    let out = run(&["simulate", "--scenario", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    // window 1: nothing completed, one carried job, zero reward
    assert!(text.lines().nth(1).unwrap().contains(",0,0,1,"), "{text}");
}

#[test]
fn sweep_is_reproducible_and_row_counted() {
    let dir = tempfile::tempdir().unwrap();
    let feeder = write(dir.path(), "chain4.json", CHAIN4_FEEDER);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let res = run(&[
            "sweep",
            "--feeder",
            feeder.to_str().unwrap(),
            "--speed",
            "200",
            "--means",
            "40",
            "--budget-grid",
            "90",
            "--crews",
            "2",
            "--trials",
            "3",
            "--seed",
            "9",
            "--mode",
            "relaxed",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(res.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 4, "header plus one row per trial: {text}");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
