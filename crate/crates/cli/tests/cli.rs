//! End-to-end tests of the `gatedmem` binary: every subcommand, the run
//! directory contract, exit codes, and config reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gatedmem"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_code(output: &Output, expected: i32) {
    assert_eq!(
        output.status.code(),
        Some(expected),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn gen_tasks(dir: &Path, n: usize) -> PathBuf {
    let out = dir.join("suite");
    let output = run(&[
        "gen",
        "--kind",
        "SK1",
        "--length",
        "3K",
        "--n",
        &n.to_string(),
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&output, 0);
    out.join("tasks.jsonl")
}

fn count_lines(path: &Path) -> usize {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .count()
}

#[test]
fn gen_writes_the_requested_task_count() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = gen_tasks(dir.path(), 8);
    assert_eq!(count_lines(&tasks), 8);
    let suite_dir = tasks.parent().unwrap();
    assert!(suite_dir.join("manifest.json").exists());
    assert!(suite_dir.join("config_effective.json").exists());
}

#[test]
fn eval_oracle_scores_perfectly_and_writes_the_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = gen_tasks(dir.path(), 4);
    let out = dir.path().join("run");
    let output = run(&[
        "eval",
        "--tasks",
        tasks.to_str().unwrap(),
        "--agent",
        "oracle",
        "--mode",
        "with-exit",
        "--chunk-size",
        "300",
        "--out",
        out.to_str().unwrap(),
        "--dump-chunks",
    ]);
    assert_code(&output, 0);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["aggregate"]["accuracy"], 1.0);
    assert_eq!(report["aggregate"]["excluded_tasks"], 0);
    assert_eq!(report["per_task"].as_array().unwrap().len(), 4);

    assert_eq!(count_lines(&out.join("metrics.csv")), 5, "header + 4 rows");
    assert_eq!(count_lines(&out.join("trajectories.jsonl")), 4);
    assert!(out.join("dynamics.csv").exists());
    assert!(out.join("chunks.json").exists());
    assert!(out.join("config_effective.json").exists());
}

#[test]
fn missing_config_file_exits_one_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = gen_tasks(dir.path(), 2);
    let output = run(&[
        "eval",
        "--tasks",
        tasks.to_str().unwrap(),
        "--agent",
        "endpoint",
        "--out",
        dir.path().join("x").to_str().unwrap(),
        "--config",
        "missing.json",
    ]);
    assert_code(&output, 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("config file not found"), "{stderr}");
}

#[test]
fn unknown_keys_in_config_files_name_the_offender() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = gen_tasks(dir.path(), 2);
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"engine": {"chunk_sz": 100}}"#).unwrap();
    let output = run(&[
        "eval",
        "--tasks",
        tasks.to_str().unwrap(),
        "--agent",
        "oracle",
        "--out",
        dir.path().join("x").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_code(&output, 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("chunk_sz"));
}

#[test]
fn unknown_flags_are_hard_errors() {
    let output = run(&[
        "gen", "--kind", "SK1", "--length", "3K", "--bogus", "--out", "/tmp/x",
    ]);
    assert_code(&output, 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("--bogus"));
}

#[test]
fn help_lists_flags_for_every_subcommand() {
    for (subcommand, expected_flags) in [
        (
            "gen",
            vec![
                "--kind", "--length", "--n", "--seed", "--out", "--cap", "--filler", "--config",
            ],
        ),
        (
            "eval",
            vec![
                "--tasks",
                "--agent",
                "--mode",
                "--update-err",
                "--exit-err",
                "--seed",
                "--workers",
                "--groups",
                "--prompt-dir",
                "--dump-chunks",
            ],
        ),
        (
            "compare",
            vec!["--tasks", "--agent", "--workers", "--chunk-size"],
        ),
        (
            "advantage-report",
            vec!["--groups", "--alpha", "--config", "--out"],
        ),
        (
            "dump-chunks",
            vec!["--tasks", "--chunk-size", "--counter", "--out"],
        ),
    ] {
        let output = run(&[subcommand, "--help"]);
        assert_code(&output, 0);
        let stdout = String::from_utf8_lossy(&output.stdout);
        for flag in expected_flags {
            assert!(stdout.contains(flag), "{subcommand} --help missing {flag}");
        }
    }
}

#[test]
fn effective_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = gen_tasks(dir.path(), 4);
    let base_cfg = dir.path().join("cfg.json");
    std::fs::write(&base_cfg, r#"{"engine": {"record_wall_clock": false}}"#).unwrap();

    let first = dir.path().join("first");
    let output = run(&[
        "eval",
        "--tasks",
        tasks.to_str().unwrap(),
        "--agent",
        "noisy",
        "--update-err",
        "0.3",
        "--exit-err",
        "0.2",
        "--seed",
        "11",
        "--chunk-size",
        "400",
        "--config",
        base_cfg.to_str().unwrap(),
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_code(&output, 0);

    // Re-running from the effective config alone reproduces the results.
    let second = dir.path().join("second");
    let output = run(&[
        "eval",
        "--tasks",
        tasks.to_str().unwrap(),
        "--agent",
        "noisy",
        "--config",
        first.join("config_effective.json").to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_code(&output, 0);

    let report_a = std::fs::read_to_string(first.join("report.json")).unwrap();
    let report_b = std::fs::read_to_string(second.join("report.json")).unwrap();
    assert_eq!(report_a, report_b);
    let trajectories_a = std::fs::read_to_string(first.join("trajectories.jsonl")).unwrap();
    let trajectories_b = std::fs::read_to_string(second.join("trajectories.jsonl")).unwrap();
    assert_eq!(trajectories_a, trajectories_b);
}

#[test]
fn compare_reports_both_modes_with_a_mode_column() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = gen_tasks(dir.path(), 4);
    let out = dir.path().join("cmp");
    let output = run(&[
        "compare",
        "--tasks",
        tasks.to_str().unwrap(),
        "--agent",
        "oracle",
        "--chunk-size",
        "300",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&output, 0);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["turn_savings_ratio"].as_f64().unwrap() >= 1.0);
    assert_eq!(report["with_eg"]["aggregate"]["accuracy"], 1.0);
    assert_eq!(report["no_eg"]["aggregate"]["accuracy"], 1.0);

    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("mode,task_id"));
    assert!(metrics.contains("with_eg,"));
    assert!(metrics.contains("no_eg,"));
    assert!(out.join("trajectories_with_eg.jsonl").exists());
    assert!(out.join("trajectories_no_eg.jsonl").exists());
}

#[test]
fn grouped_rollouts_feed_the_advantage_report() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = gen_tasks(dir.path(), 2);
    let run_dir = dir.path().join("run");
    let output = run(&[
        "eval",
        "--tasks",
        tasks.to_str().unwrap(),
        "--agent",
        "noisy",
        "--update-err",
        "0.3",
        "--exit-err",
        "0.3",
        "--seed",
        "5",
        "--chunk-size",
        "400",
        "--groups",
        "4",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_code(&output, 0);
    let group_files = std::fs::read_dir(run_dir.join("groups")).unwrap().count();
    assert_eq!(group_files, 2);

    let adv_dir = dir.path().join("adv");
    let output = run(&[
        "advantage-report",
        "--groups",
        run_dir.join("groups").to_str().unwrap(),
        "--alpha",
        "0.9",
        "--out",
        adv_dir.to_str().unwrap(),
    ]);
    assert_code(&output, 0);
    let csv = std::fs::read_to_string(adv_dir.join("advantages.csv")).unwrap();
    assert!(csv.starts_with("task_id,group,t,traj_adv,turn_adv,blended"));
    assert!(count_lines(&adv_dir.join("advantages.csv")) > 8);
}

#[test]
fn dump_chunks_emits_every_plan() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = gen_tasks(dir.path(), 3);
    let out = dir.path().join("chunks");
    let output = run(&[
        "dump-chunks",
        "--tasks",
        tasks.to_str().unwrap(),
        "--chunk-size",
        "500",
        "--counter",
        "chars4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&output, 0);
    let dumps: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("chunks.json")).unwrap()).unwrap();
    let dumps = dumps.as_array().unwrap();
    assert_eq!(dumps.len(), 3);
    assert!(dumps[0]["plan"]["T"].as_u64().unwrap() >= 1);
}

#[test]
fn unreachable_endpoint_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = gen_tasks(dir.path(), 2);
    let cfg = dir.path().join("endpoint.json");
    std::fs::write(
        &cfg,
        r#"{"endpoint": {"base_url": "http://127.0.0.1:1", "max_retries": 0, "timeout_ms": 2000}}"#,
    )
    .unwrap();
    let output = run(&[
        "eval",
        "--tasks",
        tasks.to_str().unwrap(),
        "--agent",
        "endpoint",
        "--chunk-size",
        "400",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_code(&output, 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("failed"));
}
