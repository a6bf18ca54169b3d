use std::path::Path;
use std::process::{Command, Output};

use henon_dynamics::spectra::SpectrumTable;
use serde_json::Value;

fn henon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_henon")).args(args).env_remove("HENON_THREADS").output().unwrap()
}

fn write_map(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_owned()
}

fn quad_map(a: f64, c: f64) -> String {
    format!(r#"{{"factors":[{{"a":[{a:?},0.0],"poly":{{"degree":2,"coeffs":[[{c:?},0.0]]}}}}]}}"#)
}

fn lambda_map(l: f64) -> String {
    let l2 = l * l;
    format!(r#"{{"factors":[{{"a":[1.0,0.0],"poly":{{"degree":4,"coeffs":[[{:?},0.0],[0.0,0.0],[{:?},0.0]]}}}}]}}"#, l2 * l2, -2.0 * l2)
}

#[test]
fn spectrum_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_map(dir.path(), "f.json", &quad_map(0.3, -1.0));
    let out = henon(&["spectrum", "--map", &map, "--max-period", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let table: SpectrumTable = serde_json::from_str(&text).unwrap();
    assert_eq!(table.periods.len(), 3);
    assert_eq!(serde_json::to_string_pretty(&table).unwrap().trim(), text.trim());
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_map(dir.path(), "f.json", &quad_map(0.2, 3.0));
    let file = dir.path().join("out.json");
    let a = henon(&["lyapunov", "--map", &map, "--period", "4"]);
    let b = henon(&["--out", file.to_str().unwrap(), "lyapunov", "--map", &map, "--period", "4"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(std::fs::read(&file).unwrap(), a.stdout);
}

#[test]
fn scan_is_byte_identical_across_threads() {
    let args = ["scan", "--modulus", "0.95", "--angles", "12", "--inits", "64", "--max-iter", "5000"];
    let one = henon(&[&["--threads", "1"], &args[..]].concat());
    let four = henon(&[&["--threads", "4"], &args[..]].concat());
    let again = henon(&[&["--threads", "4"], &args[..]].concat());
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(four.stdout, again.stdout);
}

#[test]
fn constant_spectrum_family_from_cli() {
    let dir = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for (i, l) in [0.5, 0.9, 1.3].into_iter().enumerate() {
        let map = write_map(dir.path(), &format!("l{i}.json"), &lambda_map(l));
        let out = henon(&["spectrum", "--map", &map, "--max-period", "2"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let t: SpectrumTable = serde_json::from_slice(&out.stdout).unwrap();
        tables.push(t);
    }
    for t in &tables {
        assert!(t.period(1).unwrap().traces.iter().all(|z| z.norm() < 1e-6));
        assert!(t.period(2).unwrap().formal_traces.iter().all(|z| (z - 2.0).norm() < 1e-6));
    }
}

#[test]
fn uncertified_fold_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_map(dir.path(), "f.json", &quad_map(0.001, 100.0));
    let out = henon(&["fold", "--map", &map]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.to_string().contains("\"q\":2"));
}

#[test]
fn malformed_map_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_map(dir.path(), "bad.json", "{\"factors\": [\n  {\"a\": [1.0, 0.0],,}\n]}");
    let out = henon(&["spectrum", "--map", &map]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:2:"), "{err}");
}

#[test]
fn invalid_map_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_map(dir.path(), "zero.json", &quad_map(0.0, 1.0));
    assert_eq!(henon(&["spectrum", "--map", &map]).status.code(), Some(1));
}

#[test]
fn selftest_passes() {
    let out = henon(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| r["passed"] == true));
}

#[test]
fn slice_writes_ppm_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("s.ppm");
    let out = henon(&["slice", "--a", "0.05", "--width", "40", "--height", "30", "--max-iter", "2000", "--image", image.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ppm = std::fs::read(&image).unwrap();
    assert!(ppm.starts_with(b"P6\n40 30\n255\n"));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["origin_basin"], true);
    assert!(v["basin_fractions"][0].as_f64().unwrap() > 0.1);
}

#[test]
fn continuation_of_alpha_crosses_twice() {
    let out = henon(&["continue", "--orbit", "alpha", "--path", "radial", "--angle", "1.0", "--r0", "0.5", "--r1", "1.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["events"].as_array().unwrap().len(), 2);
}

#[test]
fn analyze_quadratic_reports_fixed_points() {
    let out = henon(&["analyze-quadratic", "--a", "0.25,0"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["alpha"]["kind"], "attracting");
}
