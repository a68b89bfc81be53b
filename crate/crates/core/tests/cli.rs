//! The `rlk` binary's subcommands and exit statuses.

use std::path::Path;
use std::process::{Command, Output};

fn rlk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlk")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    for args in [
        vec![],
        vec!["fly"],
        vec!["train", "teleport"],
        vec!["train"],
        vec!["train", "q-learning", "--env", "hex5"],
        vec!["train", "q-learning", "--set", "alpha=fast"],
        vec!["train", "q-learning", "--set", "momentum=0.9"],
        vec!["train", "cfr"],
        vec!["solve", "dqn"],
        vec!["eval", "--out", path(&missing)],
        vec!["reproduce", "A42"],
        vec!["tournament"],
    ] {
        let out = rlk(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", text(&out));
    }
}

#[test]
fn solve_train_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let vi = dir.path().join("vi");
    let out = rlk(&["solve", "value-iteration", "--out", path(&vi), "--seed", "2"]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    for f in ["metrics.csv", "checkpoint.txt", "config.cfg"] {
        assert!(vi.join(f).exists(), "{f}");
    }

    let q = dir.path().join("q");
    let out = rlk(&["train", "q-learning", "--env", "four-rooms", "--budget", "50", "--out", path(&q)]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    let metrics = std::fs::read_to_string(q.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 51);

    let out = rlk(&["eval", "--out", path(&q), "--episodes", "5"]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    assert!(text(&out).contains("oracle_agreement"));
    assert!(q.join("eval.csv").exists());

    // the saved config reproduces the run through --config
    let again = dir.path().join("again");
    let cfg = q.join("config.cfg");
    let out = rlk(&["train", "--config", path(&cfg), "--out", path(&again)]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    assert_eq!(metrics, std::fs::read_to_string(again.join("metrics.csv")).unwrap());
}

#[test]
fn tournament_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.cfg");
    std::fs::write(&cfg, "[tournament]\ngame = tictactoe\ngames = 2\n[agents]\nr = random\nm = minimax\n").unwrap();
    let out_dir = dir.path().join("t");
    let out = rlk(&["tournament", "--config", path(&cfg), "--out", path(&out_dir), "--budget", "4"]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    let matrix = std::fs::read_to_string(out_dir.join("matrix.csv")).unwrap();
    assert!(matrix.starts_with("agent,r,m,wins,draws,losses\n"));
}

#[test]
fn reproduce_prints_one_line_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = rlk(&["reproduce", "A0", "--seed", "4", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("A0 PASS") && stdout.contains("seed 4"));
    assert!(dir.path().join("A0.csv").exists());
}
