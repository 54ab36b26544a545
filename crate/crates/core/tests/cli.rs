//! The `selfsim` binary: exit codes, error reports, budget handling and output schemas.

use std::path::PathBuf;
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

fn selfsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfsim")).args(args).env_remove("SELFSIM_BUDGET").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "stderr: {text}");
    serde_json::from_str(&text).unwrap()
}

fn schema(name: &str) -> JSONSchema {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "schemas", &format!("{name}.json")].iter().collect();
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    JSONSchema::compile(&value).unwrap()
}

fn assert_valid(schema: &JSONSchema, doc: &Value) {
    if let Err(errors) = schema.validate(doc) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("schema violations: {msgs:?}\n{doc}");
    }
}

#[test]
fn every_command_matches_its_schema() {
    let cases: &[(&str, &[&str])] = &[
        ("dim", &["dim", "--preset", "cantor3", "--n", "6"]),
        ("dim", &["dim", "--preset", "overlap-demo", "--n", "5"]),
        ("delta", &["delta", "--preset", "overlap-demo", "--n", "4"]),
        ("delta", &["delta", "--preset", "cantor3", "--n", "5"]),
        ("tree-profile", &["tree-profile", "--preset", "cantor3", "--n", "6"]),
        ("tree-profile", &["tree-profile", "--config", r#"{"points":["0","1/3","1/2"],"classify":"measure"}"#]),
        ("sumset", &["sumset", "--preset", "overlap-demo"]),
        ("sumset", &["sumset", "--preset", "cantor3"]),
        ("convolution-check", &["convolution-check", "--preset", "dyadic", "--n", "4"]),
        ("convolution-check", &["convolution-check", "--preset", "cantor3", "--m", "2", "--k", "3"]),
        ("fiber-entropy", &["fiber-entropy", "--preset", "overlap-demo", "--m", "3"]),
        ("fiber-entropy", &["fiber-entropy", "--preset", "cantor3"]),
        ("counterexample-search", &["counterexample-search", "--n", "4"]),
        ("counterexample-search", &["counterexample-search", "--config", r#"{"search":"random","trials":50}"#, "--n", "8"]),
        ("gap-demo", &["gap-demo", "--n", "2"]),
        ("gap-demo", &["gap-demo", "--config", r#"{"points":["0","1","3"]}"#]),
        ("presets", &["presets"]),
    ];
    for (name, args) in cases {
        let mut full = args.to_vec();
        full.extend(["--format", "json"]);
        let o = selfsim(&full);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let s = schema(name);
        let text = stdout(&o);
        assert!(!text.is_empty());
        for line in text.lines() {
            assert_valid(&s, &serde_json::from_str(line).unwrap());
        }
    }
}

#[test]
fn error_reports_match_schema() {
    let s = schema("error");
    for args in [
        &["dim", "--preset", "cantor3", "--n", "40"][..],
        &["dim", "--preset", "nonesuch"],
        &["dim", "--config", "{\"n\": 3,\n \"m\": }"],
        &["dim", "--config", r#"{"bogus": 1}"#],
        &["dim", "--frobnicate"],
        &["dim", "--config", "/nonexistent/file.json"],
    ] {
        let o = selfsim(args);
        assert!(!o.status.success());
        assert!(o.stdout.is_empty());
        assert_valid(&s, &error_json(&o));
    }
}

#[test]
fn budget_exceeded_exits_with_two() {
    let o = selfsim(&["dim", "--preset", "cantor3", "--n", "40"]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"], "budget_exceeded");
    assert_eq!(e["exit_code"], 2);
}

#[test]
fn invalid_input_exits_with_one() {
    let o = selfsim(&["delta", "--preset", "nonesuch"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"], "invalid_input");

    let o = selfsim(&["dim", "--config", r#"{"ifs":{"ratio":"3/2","translations":["0","1"]}}"#]);
    assert_eq!(o.status.code(), Some(1));

    let o = selfsim(&["dim", "--preset", "cantor3", "--jobs", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["field"], "jobs");
}

#[test]
fn config_errors_carry_position_or_field() {
    let o = selfsim(&["dim", "--config", "{\"n\": 3,\n \"m\": }"]);
    let e = error_json(&o);
    assert_eq!(e["error"], "parse");
    assert_eq!(e["line"], 2);

    let o = selfsim(&["dim", "--config", r#"{"ifs":{"ratio":"1/0","translations":["0"]}}"#]);
    let e = error_json(&o);
    assert_eq!(e["error"], "validation");
    assert_eq!(e["field"], "ifs.ratio");

    let o = selfsim(&["dim", "--config", r#"{"preset":"cantor3","frobnicate":1}"#]);
    let e = error_json(&o);
    assert_eq!(e["error"], "validation");
    assert!(e["message"].as_str().unwrap().contains("frobnicate"));
}

#[test]
fn config_file_and_flag_override() {
    let dir = std::env::temp_dir().join(format!("selfsim-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cfg.json");
    std::fs::write(&path, r#"{"preset": "cantor3", "n": 3, "format": "json"}"#).unwrap();
    let p = path.to_str().unwrap();

    let v: Value = serde_json::from_str(&stdout(&selfsim(&["dim", "--config", p]))).unwrap();
    assert_eq!(v["n_max"], 3);
    let v: Value = serde_json::from_str(&stdout(&selfsim(&["dim", "--config", p, "--n", "5"]))).unwrap();
    assert_eq!(v["n_max"], 5);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn budget_env_var_applies_unless_flag_given() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_selfsim"));
        c.args(["dim", "--preset", "cantor3", "--n", "8"]).args(extra);
        match env {
            Some(v) => c.env("SELFSIM_BUDGET", v),
            None => c.env_remove("SELFSIM_BUDGET"),
        };
        c.output().unwrap()
    };
    assert!(run(None, &[]).status.success());
    assert_eq!(run(Some("100"), &[]).status.code(), Some(2));
    assert!(run(Some("100"), &["--budget", "100000"]).status.success());
    let bad = run(Some("lots"), &[]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(error_json(&bad)["field"], "SELFSIM_BUDGET");
}

#[test]
fn csv_output_has_header_and_rows() {
    let text = stdout(&selfsim(&["dim", "--preset", "dyadic", "--n", "4"]));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["n", "s_n", "alpha_hat", "entropy_bits", "entropy_normalized"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(&rows[3][1], "4");
    assert_eq!(&rows[3][2], "1");

    let text = stdout(&selfsim(&["presets"]));
    assert_eq!(text.lines().next().unwrap(), "name,ratio,translations,parameter,sdim,description");
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn help_and_version_exit_zero() {
    let o = selfsim(&["--help"]);
    assert!(o.status.success());
    let help = stdout(&o);
    for cmd in ["dim", "delta", "tree-profile", "sumset", "convolution-check", "fiber-entropy", "counterexample-search", "gap-demo", "presets"] {
        assert!(help.contains(cmd), "missing {cmd} in help");
    }
    assert!(selfsim(&["--version"]).status.success());
}

#[test]
fn overlap_reported_without_failing() {
    let o = selfsim(&["delta", "--preset", "overlap-demo", "--n", "4", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["overlap_level"], 2);
    assert_eq!(v["entries"][1]["delta"], "0");
}

#[test]
fn jobs_flag_does_not_change_output() {
    for args in [&["sumset", "--preset", "overlap-demo"][..], &["tree-profile", "--preset", "zero-one-three", "--n", "5"]] {
        let mut a1 = args.to_vec();
        a1.extend(["--jobs", "1"]);
        let mut a4 = args.to_vec();
        a4.extend(["--jobs", "4"]);
        assert_eq!(selfsim(&a1).stdout, selfsim(&a4).stdout);
    }
}
