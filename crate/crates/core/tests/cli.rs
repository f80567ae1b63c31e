use std::path::PathBuf;
use std::process::{Command, Output};

use elastic_tep::harness::{read_eigen_csv, run_example, Overrides};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastic-tep"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("elastic-tep-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn without_seconds(csv: &str) -> String {
    csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(a, _)| a)).collect::<Vec<_>>().join("\n")
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["run-example", "--example", "3", "--level", "1"]).status.code(), Some(0));
    assert_eq!(run(&["run-example", "--example", "3", "--level", "9"]).status.code(), Some(2));
    assert_eq!(run(&["run-example", "--example", "12"]).status.code(), Some(2));
    assert_eq!(run(&["run-example", "--example", "3", "--level", "1", "--alpha", "1"]).status.code(), Some(2));
    assert_eq!(run(&["solve-tep", "--level", "1", "--tau-range", "5:1"]).status.code(), Some(2));
    assert_eq!(run(&["dump-mesh", "--domain", "disk"]).status.code(), Some(2));
    // Equal densities make the weight singular; the request is rejected before solving.
    assert_eq!(run(&["solve-tep", "--level", "1", "--rho0", "2", "--rho1", "2"]).status.code(), Some(2));
}

#[test]
fn csv_is_deterministic_and_round_trips() {
    let args = ["run-example", "--example", "3", "--levels", "1..3"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    let (a, b) = (String::from_utf8(a.stdout).unwrap(), String::from_utf8(b.stdout).unwrap());
    assert_eq!(without_seconds(&a), without_seconds(&b));
    assert!(a.starts_with("level,h,dofs,branch,value_re,value_im,order,residual,seconds\n"));

    let rows = read_eigen_csv(a.as_bytes()).unwrap();
    assert_eq!(rows.len(), 18);
    let report = run_example(3, Some(&[1, 2, 3]), &Overrides::default()).unwrap();
    let mut again = Vec::new();
    elastic_tep::harness::ExperimentReport { eigen_rows: rows, ..report }.write_csv(&mut again).unwrap();
    assert_eq!(without_seconds(&a), without_seconds(&String::from_utf8(again).unwrap()));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let cfg = scratch("cfg.json");
    std::fs::write(&cfg, r#"{"example": 4, "levels": [1, 2], "element": "morley", "k": 2, "format": "json"}"#).unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "run-example", "--level", "1", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
    std::fs::write(&cfg, r#"{"unknown": 1}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "self-test"]).status.code(), Some(2));
}

#[test]
fn mesh_dump_sections() {
    let path = scratch("mesh.txt");
    let out = run(&["dump-mesh", "--domain", "right-triangle", "--level", "0", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(path).unwrap();
    let headers: Vec<&str> = text.lines().filter(|l| l.chars().next().is_some_and(char::is_alphabetic)).collect();
    assert_eq!(headers.len(), 3);
    assert!(headers[0].starts_with("vertices ") && headers[1].starts_with("triangles ") && headers[2].starts_with("edges "));
    let coord = text.lines().nth(1).unwrap().split_whitespace().next().unwrap();
    let mantissa = coord.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn json_output_has_metadata() {
    let out = run(&["solve-bielastic", "--level", "1", "--k", "2", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["metadata"]["element"], "b3");
    assert_eq!(v["eigen_rows"].as_array().unwrap().len(), 2);
}
