mod common;

use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fttr-sim")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    common::scenario_dir().join(format!("{name}.toml")).display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn run_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = cli(&["run", &scenario("minimal"), "--out", out.to_str().unwrap(), "--duration", "50", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["summary.json", "flows.csv", "alarms.log", "schedule.txt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["seed"], 9);
    assert_eq!(s["duration_ms"], 50);
}

#[test]
fn mode_flag_overrides_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = cli(&["run", &scenario("minimal"), "--out", out.to_str().unwrap(), "--mode", "centralized"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["mode"], "centralized_coordinated");
}

#[test]
fn validate_accepts_the_corpus() {
    for e in std::fs::read_dir(common::scenario_dir()).unwrap() {
        let p = e.unwrap().path();
        let o = cli(&["validate", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", p.display(), stderr(&o));
    }
}

#[test]
fn schema_errors_exit_2_with_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_type = write(tmp.path(), "a.toml", "name = \"x\"\nseed = 1\nduration_ms = \"long\"\n\n[[sfu]]\nid = 1\n");
    let o = cli(&["validate", &bad_type]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("a.toml:3:"), "{}", stderr(&o));

    let bad_ref = write(
        tmp.path(),
        "b.toml",
        "name = \"x\"\nseed = 1\nduration_ms = 10\n\n[[sfu]]\nid = 1\n\n[[flow]]\nname = \"f\"\nsrc = \"wan\"\ndst = \"sfu7\"\nclass = \"video\"\npriority = 1\nsize_bytes = 100\narrival = { kind = \"constant\", rate_bps = 1000 }\n",
    );
    let o = cli(&["run", &bad_ref, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("b.toml:11:"), "{}", stderr(&o));

    let o = cli(&["run", &scenario("minimal"), "--mode", "telepathy", "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn invariant_breach_exits_3_naming_the_invariant() {
    let tmp = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(scenario("ofdma_uplink")).unwrap()
        + "\n[[event]]\nat_ms = 100\nkind = \"overlap_slots\"\n";
    let path = write(tmp.path(), "fault.toml", &src.replace("duration_ms = 2000", "duration_ms = 300"));
    let o = cli(&["run", &path, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("invariant breach: tamap_disjoint"), "{}", stderr(&o));
}

#[test]
fn missing_file_exits_1() {
    let o = cli(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_reports_deltas_and_refuses_mismatches() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |n: &str| tmp.path().join(n);
    for (name, sc, mode) in [("c", "conflict_pair", "centralized"), ("b", "conflict_pair", "baseline"), ("m", "minimal", "baseline")] {
        let o = cli(&["run", &scenario(sc), "--mode", mode, "--duration", "500", "--out", dir(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let summary = |n: &str| dir(n).join("summary.json").display().to_string();
    let report = tmp.path().join("report.json");
    let o = cli(&["compare", &summary("b"), &summary("c"), "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["global"]["collisions"]["delta"].as_f64().unwrap() < 0.0);
    assert_eq!(r["global"]["collisions"]["b"], 0.0);

    let o = cli(&["compare", &summary("b"), &summary("m")]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}
