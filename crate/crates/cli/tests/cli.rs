use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");

fn kgenus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgenus")).args(args).output().unwrap()
}

fn data(name: &str) -> String {
    format!("{DATA}/{name}")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn derive_writes_a_report_and_its_json_twin() {
    let dir = tempfile::tempdir().unwrap();
    let o = kgenus(&["derive", &data("k18.logs"), "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("derive.txt")).unwrap();
    assert_eq!(text, String::from_utf8(o.stdout).unwrap());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("derive.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["stats"]["genus"], 16);
    assert!(dir.path().join("derived.rot").exists());
}

#[test]
fn verify_exits_one_when_the_graph_is_not_complete() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&kgenus(&["derive", &data("k18.logs"), "--out", path(dir.path())])), 0);
    let rot = dir.path().join("derived.rot");
    assert_eq!(code(&kgenus(&["verify", path(&rot)])), 0);
    assert_eq!(code(&kgenus(&["verify", path(&rot), "--complete", "18"])), 1);
}

#[test]
fn apply_then_verify_completes_k18() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    assert_eq!(code(&kgenus(&["derive", &data("k18.logs"), "--out", d])), 0);
    let o = kgenus(&["apply", &format!("{d}/derived.rot"), &data("k18.script"), "--out", d]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(code(&kgenus(&["verify", &format!("{d}/result.rot"), "--complete", "18"])), 0);
}

#[test]
fn search_finds_the_k23_script() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    assert_eq!(code(&kgenus(&["derive", &data("k23.logs"), "--out", d])), 0);
    let o = kgenus(&["search", &format!("{d}/derived.rot"), &data("k23.search.toml"), "--out", d]);
    assert_eq!(code(&o), 0);
    let script = fs::read_to_string(dir.path().join("script-1.txt")).unwrap();
    assert_eq!(script, fs::read_to_string(data("k23.script")).unwrap());
}

#[test]
fn check_logs_passes_on_shipped_bundles() {
    for b in ["k18.logs", "k20.logs", "k23.logs"] {
        assert_eq!(code(&kgenus(&["check-logs", &data(b)])), 0, "{b}");
    }
}

#[test]
fn check_logs_fails_on_a_damaged_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(data("k18.logs")).unwrap().replacen(" 15 ", " 13 ", 1);
    let p = dir.path().join("bad.logs");
    fs::write(&p, text).unwrap();
    let o = kgenus(&["check-logs", path(&p)]);
    assert_eq!(code(&o), 1);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("missing 15") && out.contains("repeated 13 x2"), "{out}");
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(code(&kgenus(&["derive", "/nonexistent.logs"])), 2);
    assert_eq!(code(&kgenus(&["case", "k19"])), 2);
    assert_eq!(code(&kgenus(&["verify", &data("k18.search.toml")])), 2);
}

#[test]
fn all_cases_replay_in_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let o = kgenus(&["case", "all", "--parallel", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    for c in ["k18", "k20", "k23"] {
        for f in ["derived.rot", "script.txt", "final.rot", "report.txt", "report.json"] {
            assert!(dir.path().join(c).join(f).exists(), "{c}/{f}");
        }
    }
}
