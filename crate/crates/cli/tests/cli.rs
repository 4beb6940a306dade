use std::fs;
use std::process::{Command, Output};

use infoseq::envfile::write_environment;
use infoseq_core::special_cases::chain_environment;
use serde_json::Value;

fn infoseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infoseq"))
        .args(args)
        .env_remove("INFOSEQ_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    serde_json::from_str(&stdout(&infoseq(&all))).unwrap()
}

/// Data rows of a CSV report, header included.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn posterior_reproduces_chain_fraction() {
    let out = stdout(&infoseq(&["posterior", "--env", "chain", "--q", "4,1,0"]));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["quantity", "i", "j", "value"]);
    assert_eq!(rows[1][0], "f");
    assert!(rows[1][3].starts_with("0.478260869565217"));
    let f: f64 = rows[1][3].parse().unwrap();
    assert!((f - 11.0 / 23.0).abs() < 1e-15);
    let prior = json(&["posterior", "--env", "chain", "--q", "0,0,0"]);
    assert_eq!(prior["result"]["f"].as_f64(), Some(1.0));
}

#[test]
fn malformed_input_exits_two() {
    for args in [
        vec!["posterior", "--env", "chain", "--q", "4,1"],
        vec!["posterior", "--env", "chain", "--q", "4,x,0"],
        vec!["posterior", "--env", "nowhere.json", "--q", "1"],
        vec!["compare", "--env", "chain", "--pi", "[0.5, 0.6]"],
        vec!["bound", "--env", "chain"],
        vec!["k2", "--env", "chain"],
        vec!["k2", "--env", "k2:1,1,-1,1", "--samples", "10"],
        vec!["toptimal", "--env", "chain"],
    ] {
        let out = infoseq(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn toptimal_at_six() {
    let out = stdout(&infoseq(&["toptimal", "--env", "chain", "--t", "6"]));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][..2], ["6", "3;2;1"]);
    let v: f64 = rows[1][2].parse().unwrap();
    assert!((v - 5.0 / 11.0).abs() < 1e-15);
    let report = json(&["toptimal", "--env", "chain", "--t", "6"]);
    assert_eq!(report["result"]["unique"], Value::Bool(true));
    assert_eq!(report["tool"], "infoseq");
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["config"]["t"], 6);
    assert!(report["tolerances"]["tieTol"].as_f64().unwrap() == 1e-12);
}

#[test]
fn scan_flags_every_third_transition() {
    let out = stdout(&infoseq(&["scan", "--env", "chain", "--tmax", "20"]));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["t", "canonical", "minValue", "monotoneFlag"]);
    let flagged: Vec<&str> = rows[1..].iter().filter(|r| r[3] == "0").map(|r| r[0].as_str()).collect();
    assert_eq!(flagged, ["5", "8", "11", "14", "17"]);
    assert_eq!(rows.last().unwrap()[3], "");
}

#[test]
fn myopic_paths() {
    let report = json(&["myopic", "--env", "chain", "--B", "1", "--horizon", "6", "--mode", "unit"]);
    assert_eq!(report["result"]["divisions"][6], serde_json::json!([4, 1, 1]));
    let block = json(&["myopic", "--env", "chain", "--B", "3", "--horizon", "2"]);
    assert_eq!(block["result"]["divisions"][2], serde_json::json!([3, 2, 1]));
}

#[test]
fn compare_report_shape() {
    let report = json(&["compare", "--env", "chain", "--pi", "[0,0,0,0,0,1]"]);
    let result = &report["result"];
    for key in ["paths", "perPeriodVariances", "dominanceFlag", "optimalRisk", "myopicRisk"] {
        assert!(result.get(key).is_some(), "missing {key}");
    }
    assert!((result["optimalRisk"].as_f64().unwrap() - 5.0 / 11.0).abs() < 1e-12);
    assert!((result["myopicRisk"].as_f64().unwrap() - 17.0 / 37.0).abs() < 1e-12);
    assert_eq!(result["dominanceFlag"], Value::Bool(false));
    // Periods before the deadline carry no weight, so the first optimal path
    // (lexicographic tie-break) opens with (0,0,1), worse than (1,0,0).
    assert_eq!(result["firstViolation"], 1);
    assert_eq!(result["paths"]["optimal"][6], serde_json::json!([3, 2, 1]));
    assert_eq!(result["perPeriodVariances"]["optimal"].as_array().unwrap().len(), 6);
}

#[test]
fn bound_on_unit_weight_demo() {
    let report = json(&["bound", "--env", "w1demo"]);
    let r = report["result"]["R"].as_f64().unwrap();
    let b = report["result"]["bound"].as_f64().unwrap();
    assert!((b - 8.0 * (r + 1.0) * 3f64.powf(1.5)).abs() < 1e-9);
}

#[test]
fn freqcheck_has_no_violations() {
    let report = json(&["freqcheck", "--env", "w1demo", "--tmax", "120"]);
    assert_eq!(report["result"]["violations"], 0);
    assert_eq!(report["result"]["truncated"], Value::Bool(false));
    assert!(report["result"]["checked"].as_u64().unwrap() > 0);
}

#[test]
fn budget_exceeded_exits_three() {
    let out = infoseq(&["toptimal", "--env", "chain", "--t", "30", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(3));
    let out = Command::new(env!("CARGO_BIN_EXE_infoseq"))
        .args(["toptimal", "--env", "chain", "--t", "30"])
        .env("INFOSEQ_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = Command::new(env!("CARGO_BIN_EXE_infoseq"))
        .args(["toptimal", "--env", "chain", "--t", "30", "--budget", "1000"])
        .env("INFOSEQ_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_infoseq"))
        .args(["toptimal", "--env", "chain", "--t", "3"])
        .env("INFOSEQ_BUDGET", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn k2_sampled_rule_checks_are_seeded() {
    let args = ["k2", "--env", "k2:1,0.7,-0.4,1.3", "--samples", "500", "--seed", "17", "--format", "json"];
    let a = stdout(&infoseq(&args));
    let b = stdout(&infoseq(&args));
    assert_eq!(a, b);
    let report: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(report["result"]["ruleDisagreements"], 0);
    assert_eq!(report["result"]["conditionHolds"], Value::Bool(true));
    assert_eq!(report["result"]["greedyOptimalThrough"], 40);
}

#[test]
fn beauty_signs_and_truncation_note() {
    let dir = tempfile::tempdir().unwrap();
    for (r, sign) in [(0.5, "1"), (-0.5, "-1"), (0.0, "0")] {
        let path = dir.path().join(format!("beauty{r}.json"));
        fs::write(
            &path,
            format!(r#"{{"r": {r}, "deadline": [1.0], "env": "chain", "capacityGrid": [1, 2]}}"#),
        )
        .unwrap();
        let out = stdout(&infoseq(&["beauty", "--config", path.to_str().unwrap()]));
        assert!(out.contains("truncated to finite support"));
        let rows = csv_rows(&out);
        assert_eq!(rows[0], ["kind", "B", "Bhat", "mu", "muHat", "value", "sign"]);
        let inter: Vec<_> = rows.iter().filter(|r| r[0] == "interaction").collect();
        assert_eq!(inter.len(), 1);
        assert_eq!(inter[0][6], sign, "r = {r}");
        assert_eq!(rows.iter().filter(|r| r[0] == "EU").count(), 4);
    }
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"r": 1.5, "deadline": [1.0], "env": "chain", "capacityGrid": [1]}"#).unwrap();
    assert_eq!(infoseq(&["beauty", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn environment_file_round_trip_matches_registry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.json");
    write_environment(&chain_environment(), &path).unwrap();
    let from_file = json(&["posterior", "--env", path.to_str().unwrap(), "--q", "3,2,1"]);
    let from_name = json(&["posterior", "--env", "chain", "--q", "3,2,1"]);
    assert_eq!(from_file["result"], from_name["result"]);
}

#[test]
fn registry_names_win_over_files() {
    let dir = tempfile::tempdir().unwrap();
    let decoy = infoseq_core::special_cases::orthogonal_environment(3).unwrap();
    write_environment(&decoy, &dir.path().join("chain")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_infoseq"))
        .current_dir(dir.path())
        .args(["posterior", "--env", "chain", "--q", "4,1,0", "--format", "json"])
        .env_remove("INFOSEQ_BUDGET")
        .output()
        .unwrap();
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["result"]["f"].as_f64().unwrap() - 11.0 / 23.0).abs() < 1e-15);
}

#[test]
fn reports_are_deterministic() {
    for args in [
        vec!["scan", "--env", "orthogonal:3", "--tmax", "10"],
        vec!["compare", "--env", "chain", "--pi", "[0.2,0.3,0.5]", "--format", "json"],
        vec!["myopic", "--env", r#"multiple-biases:{"priorVars":[1,0.5,2],"noiseVars":[1,1,0.5]}"#, "--horizon", "12"],
    ] {
        assert_eq!(stdout(&infoseq(&args)), stdout(&infoseq(&args)));
    }
}
