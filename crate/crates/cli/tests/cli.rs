use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embedlens")).args(args).output().expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

#[test]
fn analyze_three_lin() {
    let r = json_of(&["analyze", &data("three_lin.json")]);
    assert_eq!(r["admits_embedding"], true);
    assert_eq!(r["modulus"], 2);
    assert_eq!(r["connected"], false);
    assert_eq!(r["pairwise_connected"], true);
    assert_eq!(r["alpha"], serde_json::json!([1, 4]));
    assert_eq!(r["format_version"], 1);
}

#[test]
fn analyze_full_cube() {
    let r = json_of(&["analyze", &data("cube.json")]);
    assert_eq!(r["admits_embedding"], false);
    assert_eq!(r["connected"], true);
    assert_eq!(r["witness"], Value::Null);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["analyze", &data("malformed.json")]), 4);
    assert_eq!(code(&["analyze", &data("missing.json")]), 4);
    assert_eq!(code(&["analyze", &data("bad_mass.json")]), 2);
    assert_eq!(code(&["verify", "no-such-suite"]), 2);
    assert_eq!(code(&["dicttest", &data("three_lin_instance.json"), &data("dictator.json"), "--max-over", "5"]), 3);
}

#[test]
fn parity_correlation_is_one() {
    let p = data("parity6.json");
    let r = json_of(&["correlate", &data("three_lin.json"), &p, &p, &p, "--n", "6"]);
    assert_eq!(r["value"], serde_json::json!([1.0, 0.0]));
    assert_eq!(r["mode"], "exact");
}

#[test]
fn constants_and_mismatched_arity() {
    let c = data("constant3.json");
    let r = json_of(&["correlate", &data("cube.json"), &c, &c, &c]);
    assert!((r["value"][0].as_f64().unwrap() - 0.125).abs() < 1e-15);
    assert_eq!(code(&["correlate", &data("cube.json"), &c, &c]), 2);
}

#[test]
fn randomized_commands_need_a_seed() {
    let p = data("parity6.json");
    assert_eq!(code(&["correlate", &data("three_lin.json"), &p, &p, &p, "--mode", "mc"]), 2);
    assert_eq!(
        code(&["dicttest", &data("three_lin_instance.json"), &data("dictator.json"), "--mode", "mc"]),
        2
    );
}

#[test]
fn sweep_emits_csv() {
    let h = data("half1.json");
    let out = run(&["correlate", &data("cube.json"), &h, &h, &h, "--sweep", "3", "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,re,im,abs,half_width");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("3,"));
}

#[test]
fn stability_reports() {
    let r = json_of(&["stability", &data("parity3_table.json"), "--rho", "0.5", "--decompose"]);
    assert!((r["stability"].as_f64().unwrap() - 0.125).abs() < 1e-12);
    assert_eq!(r["degree_weights"].as_array().unwrap().len(), 4);
    let c = json_of(&["stability", &data("constant3.json"), "--rho", "0.3"]);
    assert!((c["stability"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    let id = json_of(&["stability", &data("parity6.json"), "--rho", "1", "--nu", "1/3,2/3"]);
    assert!((id["stability"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(code(&["stability", &data("parity6.json"), "--rho", "0.5", "--nu", "1/2,1/3"]), 2);
}

#[test]
fn reduce_emits_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let r = json_of(&["reduce", &data("three_lin.json"), "--op", "xi", "--p-star", "1/2", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(r["pairwise_connected"], true);
    assert_eq!(r["p_nu"], serde_json::json!([15, 16]));
    let xi = std::fs::read_to_string(out.join("xi.json")).unwrap();
    let analyzed = json_of(&["analyze", out.join("xi.json").to_str().unwrap()]);
    assert_eq!(analyzed["arity"], 3);
    assert!(xi.contains("\"*\""));
}

#[test]
fn reduce_mu_mk_mk_and_obs34() {
    let r = json_of(&["reduce", &data("three_lin.json"), "--op", "mu-mk-mk"]);
    assert_eq!(r["diagonal_dominance"], true);
    assert_eq!(r["emitted"]["mu_mk_mk"]["alphabets"].as_array().unwrap().len(), 4);
    let o = json_of(&[
        "reduce",
        &data("three_lin.json"),
        "--op",
        "obs34",
        "--function",
        &data("half1.json"),
        "--p-star",
        "0.3",
    ]);
    assert_eq!(o["holds"], true);
    assert!(o["gap"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn dictatorship_test() {
    let inst = data("three_lin_instance.json");
    let d = json_of(&["dicttest", &inst, &data("dictator.json")]);
    assert_eq!(d["acceptance_exact"], serde_json::json!([1, 1]));
    assert_eq!(d["instance"]["valid"], true);
    let c = json_of(&["dicttest", &inst, &data("constant_one.json")]);
    assert_eq!(c["acceptance"], 0.0);
    let mc = json_of(&["dicttest", &inst, &data("dictator.json"), "--mode", "mc", "--seed", "5", "--samples", "3000"]);
    assert_eq!(mc["acceptance"], 1.0);
}

#[test]
fn verify_suite() {
    let r = json_of(&["verify", "snf"]);
    assert_eq!(r["passed"], true);
}

#[test]
fn manifests_pin_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let h = data("half1.json");
    let mut bodies = Vec::new();
    let mut manifests = Vec::new();
    for (i, threads) in ["1", "4"].into_iter().enumerate() {
        let out = dir.path().join(format!("out{i}.json"));
        let man = dir.path().join(format!("man{i}.json"));
        let status = run(&[
            "correlate",
            &data("cube.json"),
            &h,
            &h,
            &h,
            "--n",
            "1",
            "--mode",
            "mc",
            "--samples",
            "50000",
            "--seed",
            "11",
            "--threads",
            threads,
            "--output",
            out.to_str().unwrap(),
            "--manifest",
            man.to_str().unwrap(),
        ])
        .status;
        assert!(status.success());
        bodies.push(std::fs::read(&out).unwrap());
        manifests.push(std::fs::read(&man).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(manifests[0], manifests[1]);
    let m: Value = serde_json::from_slice(&manifests[0]).unwrap();
    assert_eq!(m["subcommand"], "correlate");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 4);
    assert_eq!(m["output_sha256"].as_str().unwrap().len(), 64);
}
