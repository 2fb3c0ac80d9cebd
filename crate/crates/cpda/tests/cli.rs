use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn cpda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpda"))
        .args(args)
        .env_remove("CI")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn analyze(out: &Path, extra: &[&str]) -> Output {
    let program = data("mod_plus_one.mini");
    let suite = data("mod_plus_one.suite");
    let mut args = vec![
        "analyze",
        "--program",
        path(&program),
        "--suite",
        path(&suite),
        "--output-dir",
        path(out),
    ];
    args.extend_from_slice(extra);
    cpda(&args)
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(cpda(&["--help"]).status.code(), Some(0));
    assert_eq!(cpda(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cpda(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cpda(&["analyze", "--nmpn", "many"]).status.code(), Some(1));
    // Missing required input.
    assert_eq!(cpda(&["analyze"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(analyze(dir.path(), &["--nmpn", "0"]).status.code(), Some(1));
}

#[test]
fn analysis_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.mini");
    let suite = data("mod_plus_one.suite");
    let out = cpda(&["analyze", "--program", path(&missing), "--suite", path(&suite), "--no-cache"]);
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.mini");
    fs::write(&bad, "def main( {").unwrap();
    let out = cpda(&["analyze", "--program", path(&bad), "--suite", path(&suite), "--no-cache"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_is_required_under_ci() {
    let dir = tempfile::tempdir().unwrap();
    let program = data("mod_plus_one.mini");
    let suite = data("mod_plus_one.suite");
    let run = |seed: &[&str]| {
        let mut args = vec!["analyze", "--program", path(&program), "--suite", path(&suite), "--no-cache"];
        args.extend_from_slice(seed);
        args.extend_from_slice(&["--output-dir", path(dir.path())]);
        Command::new(env!("CARGO_BIN_EXE_cpda")).args(&args).env("CI", "1").output().unwrap()
    };
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--seed", "3"]).status.code(), Some(0));
}

#[test]
fn analyze_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = analyze(dir.path(), &["--no-cache"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "observations.csv",
        "observations.meta.jsonl",
        "structure.edges",
        "scores.csv",
        "model.json",
        "diagnostics.txt",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let export = cpda(&["export", "--model", path(&dir.path().join("model.json")), "--labels"]);
    assert_eq!(export.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&export.stdout).starts_with("digraph"));
    let bad_band = cpda(&["export", "--model", path(&dir.path().join("model.json")), "--band", "x"]);
    assert_eq!(bad_band.status.code(), Some(1));
}

#[test]
fn flags_override_config_entries() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    let from_config = dir.path().join("from-config");
    let from_flag = dir.path().join("from-flag");
    fs::write(
        &config,
        format!(
            "program = {}\nsuite = {}\nnmpn = 5\nseed = 1\noutput-dir = {}\ncache = false\n",
            path(&data("mod_plus_one.mini")),
            path(&data("mod_plus_one.suite")),
            path(&from_config)
        ),
    )
    .unwrap();
    let c = path(&config);
    assert_eq!(cpda(&["--config", c, "analyze"]).status.code(), Some(0));
    let model = fs::read_to_string(from_config.join("model.json")).unwrap();
    assert!(model.contains("\"nmpn\": 5"));
    let out = cpda(&["--config", c, "analyze", "--nmpn", "7", "--output-dir", path(&from_flag)]);
    assert_eq!(out.status.code(), Some(0));
    let model = fs::read_to_string(from_flag.join("model.json")).unwrap();
    assert!(model.contains("\"nmpn\": 7"));
    assert!(model.contains("\"seed\": 1"));
    fs::write(&config, "colour = blue\n").unwrap();
    assert_eq!(cpda(&["--config", c, "analyze"]).status.code(), Some(1));
}

#[test]
fn cached_runs_reproduce_uncached_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cold = dir.path().join("cold");
    let warm = dir.path().join("warm");
    assert_eq!(analyze(&cold, &["--no-cache"]).status.code(), Some(0));
    assert_eq!(analyze(&warm, &[]).status.code(), Some(0));
    assert!(warm.join("cache").is_dir());
    let first = fs::read(warm.join("observations.csv")).unwrap();
    assert_eq!(analyze(&warm, &[]).status.code(), Some(0));
    for f in ["observations.csv", "structure.edges", "scores.csv", "model.json"] {
        let a = fs::read(cold.join(f)).unwrap();
        let b = fs::read(warm.join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    assert_eq!(first, fs::read(warm.join("observations.csv")).unwrap());
    let diagnostics = fs::read_to_string(warm.join("diagnostics.txt")).unwrap();
    assert!(diagnostics.contains("cache"), "{diagnostics}");
}

#[test]
fn localize_reports_fault_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let program = data("mod_plus_one.mini");
    let suite = data("mod_plus_one.suite");
    let out = cpda(&[
        "localize",
        "--program",
        path(&program),
        "--suite",
        path(&suite),
        "--fault-line",
        "4",
        "--no-cache",
        "--output-dir",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ranks = fs::read_to_string(dir.path().join("fault-ranks.csv")).unwrap();
    assert!(ranks.contains("cdfl,1\n"), "{ranks}");
    assert!(ranks.contains("sbfl-avg,2\n"), "{ranks}");
}

#[test]
fn localize_without_failing_tests_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("ok.suite");
    fs::write(&suite, "t1 : => 1\n").unwrap();
    let program = data("mod_plus_one.mini");
    let out = cpda(&["localize", "--program", path(&program), "--suite", path(&suite), "--no-cache"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no failing test"));
}
