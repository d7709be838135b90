use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn persuade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_persuade")).args(args).output().expect("spawn persuade")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, body: serde_json::Value) -> String {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn gen_writes_a_loadable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/cov.json");
    let res = persuade(&["gen", "--family", "coverage", "--n", "3", "--m", "2", "--d", "2", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let inst = persuade_core::model::Instance::load(&out).unwrap();
    assert_eq!(inst.num_receivers(), 3);
    assert_eq!(inst.num_states(), 2);

    let again = dir.path().join("again.json");
    persuade(&["gen", "--family", "coverage", "--n", "3", "--m", "2", "--d", "2", "--seed", "7", "--out", again.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(&out).unwrap(), fs::read_to_string(&again).unwrap());
}

#[test]
fn run_tiny_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({
            "instance": "tiny",
            "adversary": {"kind": "constant", "profile": [0]},
            "T": 25,
            "out_dir": "out"
        }),
    );
    let res = persuade(&["run", "--config", &cfg]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("run.csv")).unwrap();
    assert!(csv.starts_with("t,profile_id,utility,cum_utility,distinct_profiles,proj_ms"));
    assert_eq!(csv.lines().count(), 26);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert!(out.join("scheme_final.json").exists());
}

#[test]
fn run_on_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let res = persuade(&["gen", "--family", "table", "--n", "2", "--m", "1", "--d", "2", "--out", inst.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let cfg = write_config(
        dir.path(),
        serde_json::json!({
            "instance": {"path": "inst.json"},
            "adversary": {"kind": "random", "profiles": [[0, 0]]},
            "T": 10,
            "oracle": "greedy",
            "out_dir": "out",
            "seed": 3
        }),
    );
    let res = persuade(&["run", "--config", &cfg]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&persuade(&["accept", "--suite", "nonsense"])), 2);
    assert_eq!(code(&persuade(&["gen", "--family", "coverage", "--n", "2"])), 2);
    assert_eq!(code(&persuade(&["frobnicate"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({"instance": "tiny", "T": 5, "out_dir": "o", "bogus": 1}));
    assert_eq!(code(&persuade(&["run", "--config", &cfg])), 2);
    assert_eq!(code(&persuade(&["run", "--config", dir.path().join("missing.json").to_str().unwrap()])), 2);

    let out = dir.path().join("x.json");
    assert_eq!(code(&persuade(&["gen", "--family", "coverage", "--n", "0", "--m", "2", "--d", "1", "--out", out.to_str().unwrap()])), 2);
}

#[test]
fn bad_adversary_profile_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"instance": "tiny", "adversary": {"kind": "constant", "profile": [5]}, "T": 5, "out_dir": "o"}),
    );
    assert_eq!(code(&persuade(&["run", "--config", &cfg])), 2);
}

#[test]
fn accept_solvers_passes() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let res = persuade(&["accept", "--suite", "solvers", "--seed", "1", "--json", json.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("criterion 6"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report["criteria"][0]["passed"], true);
}

#[test]
fn thread_cap_is_respected() {
    let res = Command::new(env!("CARGO_BIN_EXE_persuade"))
        .args(["accept", "--suite", "submodularity"])
        .env("PERSUADE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&res), 0);
}
