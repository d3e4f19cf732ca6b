//! Byte-for-byte comparison of the golden scenario outputs. Regenerate with
//! `UPDATE_GOLDEN=1 cargo test --test golden`.

mod common;

use std::path::PathBuf;

use fttr_sim::network::simulate;

const FILES: [&str; 4] = ["summary.json", "flows.csv", "alarms.log", "schedule.txt"];

#[test]
fn golden_outputs_are_unchanged() {
    let out = simulate(&common::load("golden"));
    assert!(out.breaches().is_empty(), "{:?}", out.breaches());
    let tmp = tempfile::tempdir().unwrap();
    out.write_to(tmp.path()).unwrap();
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for f in FILES {
        let got = std::fs::read(tmp.path().join(f)).unwrap();
        if update {
            std::fs::write(golden.join(f), &got).unwrap();
            continue;
        }
        let want = std::fs::read(golden.join(f)).unwrap_or_else(|e| panic!("{f}: {e}"));
        if got != want {
            let (g, w) = (String::from_utf8_lossy(&got), String::from_utf8_lossy(&want));
            let line = g.lines().zip(w.lines()).position(|(a, b)| a != b).map_or(g.lines().count().min(w.lines().count()), |i| i);
            panic!("{f} differs from golden at line {}", line + 1);
        }
    }
}
