use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abelqmp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn version_mentions_schema() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("schema version 1"));
}

#[test]
fn measures_of_perfect_channel() {
    let v = stdout_json(&run(&["measures", "--lambda", "[1,1,1]", "--group", "[3]"]));
    assert!((v["holevo_bits"].as_f64().unwrap() - 3f64.log2()).abs() < 1e-12);
    assert_eq!(v["pgm_error"].as_f64().unwrap(), 0.0);
}

#[test]
fn equality_factor_and_round_trip() {
    let d = TempDir::new().unwrap();
    let a = write(d.path(), "a.json", r#"{"group":{"moduli":[3,2]},"lambda":[2,1,0,2,1,0]}"#);
    let b = write(d.path(), "b.json", r#"{"group":{"moduli":[3,2]},"lambda":[2,0,1,1,0,2]}"#);
    let out = run(&["factor", "equality", "--in", s(&a), s(&b)]);
    let v = stdout_json(&out);
    let lam: Vec<f64> = serde_json::from_value(v["lambda"].clone()).unwrap();
    for (x, y) in lam.iter().zip([1.5, 0.5, 1.0, 1.5, 0.5, 1.0]) {
        assert!((x - y).abs() < 1e-12);
    }
    let c = write(d.path(), "c.json", std::str::from_utf8(&out.stdout).unwrap());
    let m = stdout_json(&run(&["measures", "--in", s(&c)]));
    assert_eq!(m["branches"], 1);

    let out = run(&["factor", "check", "--in", s(&a), s(&b)]);
    let c = write(d.path(), "chk.json", std::str::from_utf8(&out.stdout).unwrap());
    let m = stdout_json(&run(&["measures", "--in", s(&c)]));
    assert_eq!(m["branches"], 3);
}

#[test]
fn holevo_threshold_subcommand() {
    let v = stdout_json(&run(&["de", "holevo", "--q", "3", "--rate", "1/3"]));
    assert!((v["lambda_h"].as_f64().unwrap() - 2.7287).abs() < 1e-3);
}

#[test]
fn exit_codes_and_error_json() {
    let out = run(&["measures", "--lambda", "[1,1,1,1,1,0]", "--group", "[6]"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "validation");

    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "usage");

    let out = run(&["mp", "run", "--graph", "missing.json", "--mode", "sampled"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["error"]["message"].as_str().unwrap().contains("--seed"));

    let out = run(&["de", "threshold"]);
    assert_eq!(out.status.code(), Some(1));

    let d = TempDir::new().unwrap();
    let g = write(d.path(), "g.json", r#"{"moduli":[3],"extra":1}"#);
    let out = run(&["factor", "inverse-relabel", "--in", s(&g)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_surjective_output_is_named() {
    let d = TempDir::new().unwrap();
    let t = write(
        d.path(),
        "t.json",
        r#"{"symbol_group":{"moduli":[3]},"memory":1,"output_group":{"moduli":[3]},"outputs":[[[0,0]]]}"#,
    );
    let o = write(d.path(), "o.json", r#"{"sections":[{"outputs":[[1,1,1]]}]}"#);
    let out = run(&["conv", "analyze", "--trellis", s(&t), "--obs", s(&o)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["error"]["message"].as_str().unwrap().contains("L0"));
}

#[test]
fn tree_message_passing() {
    let d = TempDir::new().unwrap();
    let g = write(
        d.path(),
        "g.json",
        r#"{
          "variables": {"x": {"moduli": [3,2]}},
          "factors": [
            {"kind": "leaf", "id": "a", "edges": ["x"], "message": {"group":{"moduli":[3,2]},"lambda":[2,1,0,2,1,0]}},
            {"kind": "leaf", "id": "b", "edges": ["x"], "message": {"group":{"moduli":[3,2]},"lambda":[2,0,1,1,0,2]}}
          ],
          "root": {"variable": "x"}
        }"#,
    );
    let v = stdout_json(&run(&["mp", "run", "--graph", s(&g), "--full"]));
    let lam: Vec<f64> = serde_json::from_value(v["root"]["branches"][0]["lambda"].clone()).unwrap();
    assert!((lam[0] - 1.5).abs() < 1e-12 && (lam[1] - 0.5).abs() < 1e-12);
    let a = stdout_json(&run(&["mp", "run", "--graph", s(&g), "--mode", "sampled", "--seed", "3", "--runs", "10"]));
    assert!((a["avg_pgm_error"].as_f64().unwrap() - v["avg_pgm_error"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn polar_construction_csv() {
    let out = run(&["polar", "construct", "--lambda", "[2,0.5,0.5]", "--group", "[3]", "--levels", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,avg_holevo_bits,avg_pgm_error");
    assert_eq!(lines.len(), 5);

    let d = TempDir::new().unwrap();
    let csv = d.path().join("p.csv");
    let v = stdout_json(&run(&[
        "polar", "construct", "--lambda", "[2,0.5,0.5]", "--group", "[3]", "--levels", "2", "--k", "2", "--out",
        s(&csv),
    ]));
    assert_eq!(v["info_set"], serde_json::json!([2, 3]));
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), text);

    let out = run(&["polar", "construct", "--lambda", "[2,0.5,0.5]", "--group", "[3]", "--levels", "5"]);
    assert_eq!(out.status.code(), Some(1), "sampled construction needs a seed");
}

#[test]
fn convolutional_block_analysis() {
    let d = TempDir::new().unwrap();
    let t = write(d.path(), "t.json", r#"{"transfer_function":{"p":[1,0,1],"q":[1,1,1],"modulus":3}}"#);
    let o = write(
        d.path(),
        "o.json",
        r#"{"sections":[
            {"outputs":[[2,0.5,0.5]],"symbol":[2,0.5,0.5]},
            {"outputs":[[2,0.5,0.5]],"symbol":[2,0.5,0.5]},
            {"outputs":[[3,0,0]],"symbol":[3,0,0]}
        ],"end":"unknown"}"#,
    );
    let v = stdout_json(&run(&["conv", "analyze", "--trellis", s(&t), "--obs", s(&o)]));
    let secs = v["sections"].as_array().unwrap();
    assert_eq!(secs.len(), 3);
    for sec in secs {
        let e = sec["posterior"]["avg_pgm_error"].as_f64().unwrap();
        assert!((0.0..=2.0 / 3.0 + 1e-12).contains(&e));
    }
}

#[test]
fn heatmap_is_thread_independent() {
    let d = TempDir::new().unwrap();
    let cfg = write(d.path(), "de.json", r#"{"population":60,"window":9,"max_iterations":8,"trials":2}"#);
    let mut outs = Vec::new();
    for t in ["1", "2"] {
        let csv = d.path().join(format!("h{t}.csv"));
        let out = run(&[
            "--threads", t, "de", "heatmap", "--config", s(&cfg), "--seed", "5", "--ray", "2.5:2.8:0.3", "--out",
            s(&csv),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outs.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    assert!(String::from_utf8_lossy(&outs[0]).starts_with("lambda0,lambda1,lambda2,success_freq"));
}

#[test]
fn verify_small_run_passes() {
    let v = stdout_json(&run(&["verify", "--count", "3", "--seed", "1"]));
    assert_eq!(v["pass"], true);
}

#[test]
fn group_and_hom_info() {
    let v = stdout_json(&run(&["groups", "info", "--group", "[3,2]"]));
    assert_eq!(v["order"], 6);
    let d = TempDir::new().unwrap();
    let h = write(
        d.path(),
        "h.json",
        r#"{"source":{"moduli":[3,2]},"target":{"moduli":[3]},"matrix":[[1,0]]}"#,
    );
    let v = stdout_json(&run(&["groups", "info", "--hom", s(&h)]));
    assert_eq!(v["surjective"], true);
    assert_eq!(v["kernel"].as_array().unwrap().len(), 2);
}
