use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures/golden")
        .join(name)
}

const CATEGORIES: &str = "Termination For Convenience,Change Of Control,Rofr/Rofo/Rofn";

fn normforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normforge"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn golden_args(out: &Path) -> Vec<String> {
    [
        "--corpus",
        golden("corpus.jsonl").to_str().unwrap(),
        "--fixtures",
        golden("replay.jsonl").to_str().unwrap(),
        "--categories",
        CATEGORIES,
        "--sample-random",
        "6",
        "--sample-challenging",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]
    .map(String::from)
    .to_vec()
}

fn run(args: &[String]) -> Output {
    normforge(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn replay_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = golden_args(dir.path());
    args.extend(["--format", "jsonl", "--format", "csv,text"].map(String::from));
    let out = run(&args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 6);
    assert!(dir.path().join("norms.csv").exists());
    assert!(dir.path().join("summary.json").exists());
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), summary);
    assert!(summary.contains("clean:   1"));
}

#[test]
fn missing_fixture_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let partial = dir.path().join("partial.jsonl");
    let kept: Vec<&str> = include_str!("../../core/fixtures/golden/replay.jsonl")
        .lines()
        .filter(|l| !l.contains("\"golden-04\""))
        .collect();
    assert_eq!(kept.len(), 5);
    fs::write(&partial, kept.join("\n")).unwrap();
    let mut args = golden_args(&dir.path().join("out"));
    args[3] = partial.to_str().unwrap().into();
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("golden-04"));
    let records = fs::read_to_string(dir.path().join("out/records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 5);
}

#[test]
fn fatal_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = normforge(&["--corpus", "/no/such/corpus.json", "--fixtures", "f.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let mut args = golden_args(dir.path());
    args[5] = "Not A Category".into();
    assert_eq!(run(&args).status.code(), Some(3));

    let mut args = golden_args(dir.path());
    args.extend(["--parallel", "0"].map(String::from));
    assert_eq!(run(&args).status.code(), Some(3));

    // a live run without a credential fails before any clause is attempted
    let mut args = golden_args(dir.path());
    args.extend(["--backend", "live"].map(String::from));
    let out = Command::new(env!("CARGO_BIN_EXE_normforge"))
        .args(&args)
        .env_remove("NORMFORGE_API_KEY")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NORMFORGE_API_KEY"));
}

#[test]
fn bad_flag_values_are_rejected() {
    let out = normforge(&["--backend", "remote"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "usage errors are fatal, not clause failures"
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("remote"));
    assert_eq!(normforge(&["--format", "xml"]).status.code(), Some(3));
    assert_eq!(
        normforge(&["--seed", "1", "--seed", "2"]).status.code(),
        Some(3)
    );
    assert_eq!(normforge(&["--help"]).status.code(), Some(0));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "[corpus]\npath = {:?}\ncategories = [\"Change Of Control\"]\n\n[selection]\nrandom_count = 1\nchallenging_count = 0\nseed = 7\n\n[backend]\nfixture_path = {:?}\n",
            golden("corpus.jsonl"),
            golden("replay.jsonl"),
        ),
    )
    .unwrap();
    let cfg = config.to_str().unwrap();

    let out = normforge(&["--config", cfg, "--seed", "99", "--dump-config"]);
    assert_eq!(out.status.code(), Some(0));
    let dumped = String::from_utf8(out.stdout).unwrap();
    assert!(dumped.contains("seed = 99"), "{dumped}");
    assert!(dumped.contains("random_count = 1"));

    let out_dir = dir.path().join("out");
    let out = normforge(&[
        "--config",
        cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "jsonl",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = fs::read_to_string(out_dir.join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 1);
    assert!(out.stdout.is_empty(), "no text format requested");

    let out = normforge(&[
        "--config",
        cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "jsonl",
        "--sample-random",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let records = fs::read_to_string(out_dir.join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 3);
}

#[test]
fn lint_config_disables_codes() {
    let dir = tempfile::tempdir().unwrap();
    let lints = dir.path().join("lints.toml");
    fs::write(
        &lints,
        "disabled = [\"MODALITY_SUSPECT\", \"DETAIL_OMITTED\"]\n",
    )
    .unwrap();
    let mut args = golden_args(&dir.path().join("out"));
    args.extend([
        "--lint-config".into(),
        lints.to_str().unwrap().into(),
        "--format".into(),
        "text".into(),
    ]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("MODALITY_SUSPECT       0"), "{text}");
    assert!(text.contains("DETAIL_OMITTED         0"));
    assert!(text.contains("MULTI_TYPE             1"));
}
