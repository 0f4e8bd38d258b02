//! The `geosep` binary: exit codes, report files and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn geosep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geosep")).args(args).output().expect("run geosep")
}

fn code(args: &[&str]) -> i32 {
    geosep(args).status.code().expect("exit code")
}

fn stdout(args: &[&str]) -> String {
    let out = geosep(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_path6(dir: &Path) -> String {
    let path = dir.join("path6.json");
    let positions: Vec<String> = (0..6).map(|i| format!("[{}.0, {}.5]", i, i % 2)).collect();
    let edges: Vec<String> = (1..6).map(|i| format!("[{}, {}]", i - 1, i)).collect();
    std::fs::write(&path, format!("{{\"d\": 2, \"positions\": [{}], \"edges\": [{}]}}", positions.join(", "), edges.join(", "))).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn separate_exit_codes() {
    assert_eq!(
        code(&[
            "separate",
            "--pair",
            "pair_b",
            "--model",
            "iggnn",
            "--power",
            "1",
            "--trials",
            "10",
            "--seed",
            "0",
            "--expect",
            "not_separated"
        ]),
        0
    );
    assert_eq!(code(&["separate", "--pair", "pair_b", "--model", "iggnn", "--power", "1", "--expect", "separated"]), 1);
    assert_eq!(code(&["separate", "--pair", "nonexistent"]), 2);
    assert_eq!(code(&["separate", "--pair", "pair_a", "--power", "0"]), 2);
    assert_eq!(code(&["separate", "--pair", "pair_a", "--expect", "maybe"]), 2);
    assert_eq!(code(&["separate", "--bogus-flag"]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn rigidity_of_path_powers() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_path6(dir.path());
    let text = stdout(&["rigidity", "--graph", &graph, "--dim", "2", "--power", "3"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["generically_globally_rigid"], true);
    assert_eq!(v["minimal_globally_rigid_power"], 3);
    assert_eq!(code(&["rigidity", "--graph", &graph, "--dim", "2", "--expect", "flexible"]), 0);
    assert_eq!(code(&["rigidity", "--graph", &graph, "--dim", "2", "--expect", "rigid"]), 1);
    assert_eq!(code(&["rigidity", "--graph", &dir.path().join("missing.json").to_string_lossy(), "--dim", "2"]), 3);
    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    assert_eq!(code(&["rigidity", "--graph", &dir.path().join("bad.json").to_string_lossy(), "--dim", "2"]), 3);
}

#[test]
fn reports_are_written_atomically_and_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        assert_eq!(
            code(&[
                "separate",
                "pair_a",
                "pair_b",
                "--model",
                "gennet,iggnn",
                "--power",
                "1,2",
                "--trials",
                "3",
                "--seed",
                "9",
                "--out",
                out.to_str().unwrap()
            ]),
            0
        );
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(report["results"].as_array().unwrap().len(), 8);
    assert!(report.get("wall_clock_seconds").is_none());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    assert_eq!(code(&["separate", "pair_a", "--trials", "1", "--out", dir.path().join("no/such/dir.json").to_str().unwrap()]), 3);
}

#[test]
fn table_format_has_one_column_per_power() {
    let text = stdout(&["separate", "pair_a", "pair_b", "--model", "iggnn", "--power", "1,2,3", "--trials", "4", "--format", "table"]);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].contains("power 1") && lines[0].contains("power 2") && lines[0].contains("power 3"), "{text}");
    let row = lines.iter().find(|l| l.starts_with("pair_b")).unwrap();
    assert_eq!(row.matches("not_separated").count(), 2, "{text}");
    assert_eq!(row.matches(" separated").count(), 1, "{text}");
}

#[test]
fn gen_pairs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["gen-pairs", "pair_a", "pair_b", "k_chain_4", "--out-dir", dir.path().to_str().unwrap()]), 0);
    let file = dir.path().join("k_chain_4.json");
    assert!(file.exists());
    assert_eq!(code(&["separate", file.to_str().unwrap(), "--depth", "3", "--trials", "3", "--expect", "separated"]), 0);
    let single = stdout(&["gen-pairs", "pair_b"]);
    assert_eq!(single, std::fs::read_to_string(dir.path().join("pair_b.json")).unwrap());
    assert_eq!(code(&["gen-pairs", "pair_z"]), 2);
}

#[test]
fn invariance_and_sweep_commands() {
    assert_eq!(code(&["invariance", "--random", "7", "--dim", "3", "--model", "gennet,iggnn", "--trials", "10", "--expect", "pass"]), 0);
    let a = stdout(&["sweep", "--kind", "isomorphic", "--count", "5", "--nodes", "6", "--expect", "not_separated"]);
    let b = stdout(&["sweep", "--kind", "isomorphic", "--count", "5", "--nodes", "6"]);
    assert_eq!(a, b);
    assert_eq!(code(&["sweep", "--kind", "sideways"]), 2);
    assert_eq!(code(&["sweep", "--nodes", "40", "--count", "1"]), 2);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["separate", "k_chain_4", "--depth", "3", "--trials", "6", "--seed", "2"];
    let one = Command::new(env!("CARGO_BIN_EXE_geosep")).args(args).env("GEOSEP_THREADS", "1").output().unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_geosep")).args(args).env("GEOSEP_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_geosep")).args(args).env("GEOSEP_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error[usage]"));
}
