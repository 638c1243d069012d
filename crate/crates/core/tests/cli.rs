use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("docs/schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn satnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satnet")).args(args).output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = satnet(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn assert_schema(name: &str, instance: &Value) {
    let validator = jsonschema::validator_for(&schema(name)).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{instance:#}");
}

/// The diagnostic line on stderr, parsed.
fn diagnostic(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "{text}");
    serde_json::from_str(lines[0]).unwrap()
}

#[test]
fn solve_reports_both_ends_of_the_segment() {
    let input = data("three_node.json");
    let v = ok_json(&["solve", "--input", input.to_str().unwrap()]);
    assert!(close(&floats(&v["x_min"]), &[4.380541, 0.0, 0.035135], 1e-6));
    assert!(close(&floats(&v["x_max"]), &[4.97, 1.8175, 2.0], 1e-12));
    assert_eq!(v["partition"]["exposed"], serde_json::json!([0, 1, 2]));
}

#[test]
fn sweep_has_a_row_at_the_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let crossings = dir.path().join("crossings.json");
    let input = data("three_node_shock.json");
    let out = satnet(&[
        "sweep", "--input", input.to_str().unwrap(), "--q", "0.07,0.59,0.34",
        "--eps-hi", "14", "--grid", "1401", "--crossings", crossings.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "eps,unique,loss_min,loss_max,n_defaults,x_min_1,x_min_2,x_min_3,x_max_1,x_max_2,x_max_3"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1401);
    let at = rows.iter().find(|r| r.starts_with("9,")).unwrap();
    assert!(at.starts_with("9,false,10.2125,14.5843243243,3,"), "{at}");

    let v: Value = serde_json::from_str(&std::fs::read_to_string(&crossings).unwrap()).unwrap();
    assert_schema("crossings", &v);
    assert_eq!(v[0]["eps_star"].as_f64().unwrap(), 9.0);
    assert!((v[0]["loss_jump"].as_f64().unwrap() - 4.371825).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    let bad = data("bad_row_sum.json");
    let out = satnet(&["validate", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(diagnostic(&out)["error"], "invalid_network");
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_schema("validate", &report);
    assert_eq!(report["violations"][0]["kind"], "row_sum_excess");

    let out = satnet(&["solve", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let ex = data("three_node.json");
    let ex = ex.to_str().unwrap();
    let out = satnet(&["solve", "--input", ex, "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostic(&out)["error"], "non_convergence");

    for args in [
        vec!["frobnicate", "--input", ex],
        vec!["solve"],
        vec!["jump", "--input", ex, "--p", "3"],
        vec!["sweep", "--input", ex, "--eps-hi", "1"],
        vec!["sweep", "--input", ex, "--q", "1,1,1"],
        vec!["sweep", "--input", ex, "--q", "1,1,1", "--eps-hi", "1", "--grid", "1"],
        vec!["solve", "--input", ex, "--tol-fp", "-1"],
    ] {
        let out = satnet(&args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        assert_eq!(diagnostic(&out)["exit"], 3);
    }

    let out = satnet(&["solve", "--input", "/nonexistent/file.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(diagnostic(&out)["error"], "io");
}

#[test]
fn every_json_command_matches_its_schema() {
    let ex = data("three_node.json");
    let ex = ex.to_str().unwrap();
    for (cmd, extra) in [
        ("validate", vec![]),
        ("decompose", vec![]),
        ("solve", vec![]),
        ("classify", vec![]),
        ("set", vec![]),
        ("loss", vec!["--c0", "5,2,2"]),
        ("jump", vec![]),
        ("jump", vec!["--p", "inf"]),
    ] {
        let mut args = vec![cmd, "--input", ex];
        args.extend(extra);
        assert_schema(cmd, &ok_json(&args));
    }
    let mut broken = ok_json(&["solve", "--input", ex]);
    broken.as_object_mut().unwrap().remove("x_min");
    assert!(!jsonschema::is_valid(&schema("solve"), &broken));

    let v = ok_json(&["set", "--input", ex, "--c", "1,0,0"]);
    assert_schema("set", &v);
    assert_eq!(v["unique"], true);

    let liab = data("two_banks_liabilities.json");
    let converted = ok_json(&["convert", "--input", liab.to_str().unwrap()]);
    assert_schema("convert", &converted);
    assert_schema("network", &converted);
    for f in ["three_node.json", "three_node_shock.json"] {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(data(f)).unwrap()).unwrap();
        assert_schema("network", &v);
    }
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&liab).unwrap()).unwrap();
    assert_schema("liabilities", &v);
}

#[test]
fn liability_files_are_solved_directly() {
    let liab = data("two_banks_liabilities.json");
    let liab = liab.to_str().unwrap();
    let conv = ok_json(&["convert", "--input", liab]);
    assert_eq!(floats(&conv["w"]), vec![5.0, 4.0]);
    assert_eq!(floats(&conv["c"]), vec![2.0, 0.0]);
    let v = ok_json(&["solve", "--input", liab]);
    assert_eq!(v["x_min"], v["x_max"]);
}

#[test]
fn loss_and_jump_values() {
    let ex = data("three_node.json");
    let ex = ex.to_str().unwrap();
    let v = ok_json(&["loss", "--input", ex, "--c0", "5,2,2"]);
    assert!((v["loss_min"].as_f64().unwrap() - 10.2125).abs() < 1e-12);
    assert!((v["loss_max"].as_f64().unwrap() - 14.584324).abs() < 1e-6);
    let v = ok_json(&["jump", "--input", ex, "--p", "1"]);
    assert_eq!(v["max_jump_norm"]["1"].as_f64().unwrap(), 4.45);

    let out = satnet(&["loss", "--input", ex, "--c0", "0,0,0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_a_trajectory() {
    let ex = data("three_node.json");
    let out = satnet(&["simulate", "--input", ex.to_str().unwrap(), "--x0", "5,3,2", "--t-end", "100", "--dt", "0.05"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x_1,x_2,x_3");
    assert_eq!(lines[1], "0,5,3,2");
    assert_eq!(lines.len(), 2002);
    let last: Vec<f64> = lines[2001].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(last[0], 100.0);
    assert!(close(&last[1..], &[4.97, 1.8175, 2.0], 1e-8));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let ex = data("three_node.json");
    let shock = data("three_node_shock.json");
    let (ex, shock) = (ex.to_str().unwrap(), shock.to_str().unwrap());
    let runs: Vec<Vec<&str>> = vec![
        vec!["solve", "--input", ex],
        vec!["classify", "--input", ex],
        vec!["set", "--input", ex],
        vec!["jump", "--input", ex],
        vec!["sweep", "--input", shock, "--q", "0.07,0.59,0.34", "--eps-hi", "14", "--grid", "141"],
        vec!["simulate", "--input", ex, "--t-end", "5"],
    ];
    for args in runs {
        let a = satnet(&args);
        let b = satnet(&args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn output_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let ex = data("three_node.json");
    let out = satnet(&["decompose", "--input", ex.to_str().unwrap(), "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_schema("decompose", &v);
    assert_eq!(v["sinks"][0]["out_connected"], false);
}

#[test]
fn in_process_entry_point() {
    let ex = data("three_node.json");
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = satnet::cli::main_with(["satnet", "jump", "--input", ex.to_str().unwrap(), "--p", "2"], &mut out, &mut err);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert!(v["max_jump_norm"]["2"].as_f64().unwrap() > 0.0);
}
