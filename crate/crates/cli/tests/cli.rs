use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn relaysec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaysec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn reference() -> Value {
    serde_json::from_str(relaysec::Scenario::reference_json()).unwrap()
}

fn write_scenario(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.display().to_string()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn help_exits_zero() {
    let out = relaysec(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("perfect-sweep"));
}

#[test]
fn mi_table_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("mi.csv");
    let out = relaysec(&["mi-table", "--rho-max", "2", "--points", "3", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# relaysec "));
    assert!(text.contains("sha256="));
    assert!(!text.contains('\r'));
    assert_eq!(body(&text), "rho,I_bits\n0,0\n1,0.721451595\n2,0.912822122\n");
}

#[test]
fn mi_table_inline_alphabet() {
    let out = relaysec(&["mi-table", "--alphabet", "[[1,0],[-1,0]]", "--rho-max", "1", "--points", "2"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("1,0.721451595"));
    let bad = relaysec(&["mi-table", "--alphabet", "[[1,0],[1,0]]"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn perfect_sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = relaysec(&["perfect-sweep", "--an", "both", "--L", "8", "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ta, tb) = (fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
    assert_eq!(body(&ta), body(&tb));

    let header = "R0,Rs,t_max,rank_ratio,power_used,status";
    assert_eq!(ta.lines().filter(|l| *l == header).count(), 6);
    for line in body(&ta).lines().filter(|l| *l != header) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 6);
        let rs: f64 = f[1].parse().unwrap();
        assert!((0.0..=0.5).contains(&rs), "{line}");
        assert!(f[2].len() <= 12, "at most 9 significant digits: {line}");
    }
}

#[test]
fn robust_sweep_sorts_grid() {
    let out = relaysec(&["robust-sweep", "--eps-grid", "0.02,0,0.01", "--an", "on"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not sorted"));
    let text = String::from_utf8(out.stdout).unwrap();
    let b = body(&text);
    let rows: Vec<&str> = b.lines().collect();
    assert_eq!(rows[0], "eps,J,Rs_lower,r_max,rank_ratio,status");
    assert_eq!(rows.len(), 1 + 9);
    let eps: Vec<f64> = rows[1..].iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(eps.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn fig2_writes_curves_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = relaysec(&["fig2", "--L", "10", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for j in 1..=3 {
        for an in ["on", "off"] {
            let p = dir.path().join(format!("fig2_J{j}_an_{an}.csv"));
            let text = fs::read_to_string(&p).unwrap();
            assert!(body(&text).starts_with("R0,Rs\n"));
            assert_eq!(body(&text).lines().count(), 12);
        }
    }
    let s = read_json(&dir.path().join("fig2_summary.json"));
    let curves = s["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 6);
    for c in curves {
        assert!(c["argmax_r0"].as_f64().is_some());
        assert!(c["max_rs"].as_f64().unwrap() > 0.0);
    }
    assert!(s["manifest"]["scenario_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn fig3_summary_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = relaysec(&["fig3", "--eps-grid", "0,0.01,0.03,0.05", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_json(&dir.path().join("fig3_summary.json"));
    assert_eq!(s["r0"].as_f64(), Some(0.081));
    for set in s["sets"].as_array().unwrap() {
        assert_eq!(set["non_increasing_in_eps"], Value::Bool(true));
        assert_eq!(set["reduction_ok"], Value::Bool(true));
    }
    assert!(s["non_increasing_in_j"].as_array().unwrap().iter().all(|v| v == &Value::Bool(true)));
    let csv = fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    assert!(body(&csv).starts_with("eps,J,Rs_lower\n"));
}

#[test]
fn validate_reference_passes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("report.json");
    let out = relaysec(&["validate", "--out", p.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&p);
    assert_eq!(r["passed"], Value::Bool(true));
    assert!(r["checks"].as_array().unwrap().len() > 10);
}

#[test]
fn validate_rejects_antenna_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = reference();
    v["N"] = Value::from(3);
    let path = write_scenario(dir.path(), "bad.json", &v);
    let out = relaysec(&["validate", "--scenario", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("g: length 2 does not match N=3"), "{err}");
}

#[test]
fn validate_notes_unusable_relay_link() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = reference();
    v["eps_all"] = Value::from(3.0);
    let path = write_scenario(dir.path(), "wide.json", &v);
    let p = dir.path().join("report.json");
    let out = relaysec(&["validate", "--scenario", &path, "--out", p.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let notes = read_json(&p)["notes"].to_string();
    assert!(notes.contains("relay_link_unusable"), "{notes}");
}

#[test]
fn empty_eavesdropper_list_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = reference();
    v["J"] = Value::from(0);
    v["z0"] = Value::Array(vec![]);
    v["z"] = Value::Array(vec![]);
    let path = write_scenario(dir.path(), "none.json", &v);
    let out = relaysec(&["fig2", "--scenario", &path, "--L", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(relaysec(&["validate", "--scenario", "/nonexistent/s.json"]).status.code(), Some(2));
    assert_eq!(relaysec(&["robust-sweep", "--eps-grid", "0,-1"]).status.code(), Some(2));
    assert_eq!(relaysec(&["perfect-sweep", "--L", "0"]).status.code(), Some(2));
    assert_eq!(relaysec(&["oracle-check"]).status.code(), Some(2));
    assert_eq!(relaysec(&["bogus"]).status.code(), Some(2));
}

#[test]
fn oracle_check_modes() {
    let dir = tempfile::tempdir().unwrap();
    // the 3σ test at high SNR needs enough draws to see the rare large-loss events
    for (mode, samples) in [("mi", "1000000"), ("search", "20000"), ("worstcase", "20000")] {
        let p = dir.path().join(format!("{mode}.json"));
        let out = relaysec(&[
            "oracle-check", "--mode", mode, "--samples", samples, "--seed", "7", "--out", p.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{mode}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(read_json(&p)["passed"], Value::Bool(true));
    }
}

#[test]
fn threads_flag_accepted() {
    let out = relaysec(&["--threads", "1", "mi-table", "--points", "2"]);
    assert!(out.status.success());
    assert_eq!(relaysec(&["--threads", "0", "mi-table"]).status.code(), Some(2));
}
