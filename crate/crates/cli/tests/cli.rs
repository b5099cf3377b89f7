use std::path::Path;
use std::process::{Command, Output};

fn marblebot(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marblebot"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn marblebot")
}

#[test]
fn same_seed_same_file() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.csv", "b.csv"] {
        let o = marblebot(&["run", "E1", "--seed", "7", "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn stdout_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = marblebot(&["run", "e3", "--out", "t.csv"], dir.path());
    assert!(o.status.success());
    let o2 = marblebot(&["run", "E3"], dir.path());
    assert_eq!(o2.stdout, std::fs::read(dir.path().join("t.csv")).unwrap());
}

#[test]
fn unknown_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = marblebot(&["run", "NOPE"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown scenario"));
}

#[test]
fn unknown_subcommand_and_flag_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(marblebot(&["fly"], dir.path()).status.code(), Some(2));
    assert_eq!(marblebot(&["run", "E1", "--colour"], dir.path()).status.code(), Some(2));
}

#[test]
fn analyze_prints_fit_and_tallies() {
    let dir = tempfile::tempdir().unwrap();
    assert!(marblebot(&["run", "E1", "--out", "t.csv"], dir.path()).status.success());
    let o = marblebot(&["analyze", "t.csv", "--hist-width", "0.004"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for needle in [
        "decisions",
        "left",
        "right",
        "stay",
        "fit",
        "mean",
        "std",
        "histogram  bin 4.0 mV",
    ] {
        assert!(text.contains(needle), "missing {needle:?} in\n{text}");
    }
}

#[test]
fn analyze_missing_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = marblebot(&["analyze", "absent.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn raw_output_and_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.toml"),
        "name = \"pulse\"\nduration = 8.0\nseed = 2\n\n[[stimuli]]\nt_on = 4.0\nduration = 1.0\namplitude = 0.2\nmode = \"inhibit\"\n",
    )
    .unwrap();
    let o = marblebot(&["run", "s.toml", "--out", "t.csv", "--raw-out", "raw.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let raw = std::fs::read_to_string(dir.path().join("raw.csv")).unwrap();
    let mut lines = raw.lines();
    assert_eq!(lines.next(), Some("t_s,volts,laser_on"));
    assert_eq!(lines.count(), 801);
}

#[test]
fn scenarios_lists_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let o = marblebot(&["scenarios"], dir.path());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["E1", "E2", "E3", "E4"] {
        assert!(text.contains(name));
    }
}
