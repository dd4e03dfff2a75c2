//! End-to-end tests of the `protosynth` binary: exit codes, report text,
//! and the round-trips between subcommands (sat-reduce output feeds
//! synthesize, synthesize --out emits reloadable automata).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_protosynth"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/abp")
        .join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("protosynth-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_accepts_manual_manifest() {
    let out = bin().arg("validate").arg(fixture("manual.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("clean"));
}

#[test]
fn validate_rejects_missing_manifest() {
    let out = bin().arg("validate").arg("/nonexistent/nowhere.toml").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compose_reports_closed_product() {
    let out = bin().arg("compose").arg(fixture("manual.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("closed: true"), "{text}");
}

#[test]
fn verify_passes_manual_solution() {
    let out = bin()
        .args(["--format", "json"])
        .arg("verify")
        .arg(fixture("manual.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
}

#[test]
fn synthesize_explicit_completes_all_scenarios() {
    let dir = scratch("synth");
    let out = bin()
        .arg("synthesize")
        .arg(fixture("all_scenarios.toml"))
        .args(["--engine", "explicit", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("8 transitions added"), "{}", stdout(&out));
    let delta = std::fs::read_to_string(dir.join("completion.delta")).unwrap();
    assert_eq!(delta.lines().count(), 8);
    assert!(delta.lines().all(|l| l.starts_with("trans sender ")));
    // The emitted completed automata parse back.
    for name in ["sender.aut", "receiver.aut"] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        let files = [dir.join("probe.aut")];
        std::fs::write(&files[0], &text).unwrap();
        let parsed = bin().arg("export-dot").arg(&files[0]).output().unwrap();
        assert_eq!(parsed.status.code(), Some(0));
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn scenario_compile_emits_skeletons() {
    let dir = scratch("scn");
    let out = bin()
        .arg("scenario-compile")
        .arg(fixture("abp.scn"))
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("sender: 12 states"), "{text}");
    assert!(text.contains("receiver: 8 states"), "{text}");
    assert!(dir.join("sender.aut").exists());
    assert!(dir.join("receiver.aut").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sat_solve_exit_codes_track_satisfiability() {
    let dir = scratch("sat");
    let sat = dir.join("sat.cnf");
    let unsat = dir.join("unsat.cnf");
    std::fs::write(&sat, "p cnf 2 2\n1 -2 0\n-1 2 0\n").unwrap();
    std::fs::write(&unsat, "p cnf 1 2\n1 0\n-1 0\n").unwrap();
    for engine in ["brute", "explicit", "bdd"] {
        let s = bin().arg("sat-solve").arg(&sat).args(["--engine", engine]).output().unwrap();
        assert_eq!(s.status.code(), Some(0), "engine {engine}: {}", stdout(&s));
        assert!(stdout(&s).contains("s SATISFIABLE"));
        let u = bin().arg("sat-solve").arg(&unsat).args(["--engine", engine]).output().unwrap();
        assert_eq!(u.status.code(), Some(1), "engine {engine}: {}", stdout(&u));
        assert!(stdout(&u).contains("s UNSATISFIABLE"));
    }
    let bad = bin().arg("sat-solve").arg(dir.join("missing.cnf")).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sat_reduce_round_trips_through_synthesize() {
    let dir = scratch("reduce");
    let cnf = dir.join("f.cnf");
    std::fs::write(&cnf, "p cnf 3 2\n1 2 -3 0\n-1 3 0\n").unwrap();
    let red = bin().arg("sat-reduce").arg(&cnf).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(red.status.code(), Some(0), "{}", stdout(&red));
    // The emitted instance is a normal manifest; completing its process
    // decides the formula.
    let synth = bin()
        .args(["--format", "json"])
        .arg("synthesize")
        .arg(dir.join("instance.toml"))
        .args(["--engine", "explicit"])
        .output()
        .unwrap();
    assert_eq!(synth.status.code(), Some(0), "{}", stdout(&synth));
    let v: serde_json::Value = serde_json::from_str(&stdout(&synth)).unwrap();
    assert_eq!(v["result"], "solution");
    // One choice transition per variable.
    assert_eq!(v["added_count"], 3);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn export_dot_is_deterministic() {
    let a = bin().arg("export-dot").arg(fixture("sender_manual.aut")).output().unwrap();
    let b = bin().arg("export-dot").arg(fixture("sender_manual.aut")).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).starts_with("digraph"));
    let missing = bin().arg("export-dot").arg("/nonexistent.aut").output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
