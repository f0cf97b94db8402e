use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_stiffquad");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Tiny networks so a run takes well under a second.
fn small_run_file(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    std::fs::write(&path, "[train]\nactor_hidden = [16]\ncritic_hidden = [16]\ncheckpoint_every = 1\n").unwrap();
    path
}

fn train(dir: &Path, grouping: &str, out: &str) -> PathBuf {
    train_with(dir, grouping, out, &[])
}

fn train_with(dir: &Path, grouping: &str, out: &str, extra: &[&str]) -> PathBuf {
    let config = small_run_file(dir);
    let out = dir.join(out);
    let mut args = extra.to_vec();
    args.extend(["train", "--config", s(&config), "--grouping", grouping, "--iterations", "2", "--envs", "4", "--seed", "7", "--out", s(&out)]);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn train_writes_checkpoints_metrics_and_effective_config() {
    let dir = TempDir::new().unwrap();
    let out = train(dir.path(), "PLS", "run");
    for f in ["metrics.csv", "policy_00001.vstk", "policy_00002.vstk", "policy_final.vstk", "run.toml"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    let echo = std::fs::read_to_string(out.join("run.toml")).unwrap();
    for needle in ["grouping = \"PLS\"", "seed = 7", "n_envs = 4", "n_iterations = 2", "gamma = 0.99", "[env]"] {
        assert!(echo.contains(needle), "echo lacks {needle}:\n{echo}");
    }
}

#[test]
fn same_command_gives_identical_metrics() {
    let dir = TempDir::new().unwrap();
    let a = train(dir.path(), "HJLS", "a");
    let b = train(dir.path(), "HJLS", "b");
    let read = |p: &Path| std::fs::read(p.join("metrics.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let ck = |p: &Path| std::fs::read(p.join("policy_final.vstk")).unwrap();
    assert_eq!(ck(&a), ck(&b));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let one = train_with(dir.path(), "PLS", "one", &["--threads", "1"]);
    let three = train_with(dir.path(), "PLS", "three", &["--threads", "3"]);
    for f in ["metrics.csv", "policy_final.vstk"] {
        assert_eq!(std::fs::read(one.join(f)).unwrap(), std::fs::read(three.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn flags_override_the_run_file() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "grouping = \"IJS\"\nseed = 1\n[train]\nn_envs = 2\nn_iterations = 1\nactor_hidden = [8]\ncritic_hidden = [8]\n").unwrap();
    let out = dir.path().join("o");
    let o = run(&["train", "--config", s(&config), "--grouping", "PJS", "--seed", "5", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let echo = std::fs::read_to_string(out.join("run.toml")).unwrap();
    assert!(echo.contains("grouping = \"PJS\"") && echo.contains("seed = 5") && echo.contains("n_envs = 2"), "{echo}");
}

#[test]
fn unknown_grouping_lists_the_valid_names() {
    let o = run(&["train", "--grouping", "PLX", "--iterations", "1"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    for name in ["P20", "P50", "IJS", "PJS", "PLS", "HJLS"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn invalid_config_reports_the_line() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "grouping = \"PLS\"\n\n[train]\ngamma = \"high\"\n").unwrap();
    let out = dir.path().join("o");
    let o = run(&["train", "--config", s(&config), "--out", s(&out)]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("bad.toml") && err.contains("line 4"), "{err}");
    assert!(!out.exists());

    std::fs::write(&config, "grouping = \"PLS\"\n[train]\ngamma = 1.5\n").unwrap();
    let o = run(&["train", "--config", s(&config), "--out", s(&out)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("gamma"), "{}", stderr(&o));
}

#[test]
fn eval_push_writes_trials_and_polar_plot() {
    let dir = TempDir::new().unwrap();
    let ck = train(dir.path(), "PLS", "run").join("policy_final.vstk");
    let out = dir.path().join("push");
    let o = run(&["eval", "push", "--checkpoint", s(&ck), "--trials", "12", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trials = std::fs::read_to_string(out.join("push_trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 13);
    assert!(std::fs::read_to_string(out.join("polar.svg")).unwrap().starts_with("<svg"));
    let bins = std::fs::read_to_string(out.join("push_success.csv")).unwrap();
    assert_eq!(bins.lines().count(), 6);
}

#[test]
fn eval_cot_has_one_row_per_speed() {
    let dir = TempDir::new().unwrap();
    let ck = train(dir.path(), "P50", "run").join("policy_final.vstk");
    let out = dir.path().join("cot");
    let o = run(&["eval", "cot", "--checkpoint", s(&ck), "--speeds", "0.5,0.8,1.0", "--duration", "3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = std::fs::read_to_string(out.join("cot.csv")).unwrap();
    let speeds: Vec<&str> = rows.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(speeds, ["0.5", "0.8", "1.0"]);
}

#[test]
fn eval_tracking_and_payload_export() {
    let dir = TempDir::new().unwrap();
    let ck = train(dir.path(), "PLS", "run").join("policy_final.vstk");
    let out = dir.path().join("eval");
    let o = run(&["eval", "tracking", "--checkpoint", s(&ck), "--duration", "1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("tracking.csv")).unwrap().lines().count(), 25);
    let o = run(&["eval", "payload", "--checkpoint", s(&ck), "--payload", "5", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("payload.csv").is_file() && out.join("stiffness.svg").is_file());
}

#[test]
fn missing_checkpoint_fails_without_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("never");
    for protocol in ["tracking", "push", "cot", "payload"] {
        let o = run(&["eval", protocol, "--checkpoint", s(&dir.path().join("absent.vstk")), "--out", s(&out)]);
        assert!(!o.status.success());
        assert!(stderr(&o).contains("absent.vstk"));
        assert!(!out.exists(), "{protocol} created its output dir");
    }
    let traj = dir.path().join("t.csv");
    let o = run(&["replay", "--checkpoint", "absent.vstk", "--out", s(&traj)]);
    assert!(!o.status.success() && !traj.exists());
}

#[test]
fn grouping_mismatch_is_refused_with_both_tags() {
    let dir = TempDir::new().unwrap();
    let ck = train(dir.path(), "PLS", "run").join("policy_final.vstk");
    let out = dir.path().join("e");
    let o = run(&["eval", "push", "--checkpoint", s(&ck), "--grouping", "IJS", "--trials", "2", "--out", s(&out)]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("PLS") && err.contains("IJS"), "{err}");
    assert!(!out.exists());
}

#[test]
fn corrupt_checkpoint_is_rejected() {
    let dir = TempDir::new().unwrap();
    let ck = dir.path().join("junk.vstk");
    std::fs::write(&ck, b"not a checkpoint").unwrap();
    let o = run(&["inspect", "--checkpoint", s(&ck)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("not a policy checkpoint"), "{}", stderr(&o));
}

#[test]
fn replay_logs_every_control_step() {
    let dir = TempDir::new().unwrap();
    let ck = train(dir.path(), "P20", "run").join("policy_final.vstk");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("nested/b.csv");
    for out in [&a, &b] {
        let o = run(&["--threads", "2", "replay", "--checkpoint", s(&ck), "--seed", "4", "--duration", "5", "--out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let mut reader = csv::Reader::from_path(&a).unwrap();
    let header = reader.headers().unwrap().clone();
    let kp: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.starts_with("kp_")).map(|(i, _)| i).collect();
    assert_eq!(kp.len(), 16);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 250);
    for row in &rows {
        for &i in &kp {
            assert_eq!(row[i].parse::<f64>().unwrap(), 20.0);
        }
    }
}

#[test]
fn inspect_prints_the_header() {
    let dir = TempDir::new().unwrap();
    let ck = train(dir.path(), "HJLS", "run").join("policy_00001.vstk");
    let o = run(&["inspect", "--checkpoint", s(&ck)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("HJLS (19 actions)") && text.contains("iteration    1"), "{text}");
}
