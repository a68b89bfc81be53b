//! Run-directory contracts of the experiment harness.

use std::fs;
use std::path::Path;

use rl_kernel::harness::run::{CHECKPOINT_FILE, CONFIG_FILE, METRICS_FILE};
use rl_kernel::harness::{
    load_run, metrics_header, reproduce, run_experiment, tournament, Algo, ExperimentConfig, TournamentConfig,
};
use rl_kernel::RlError;

fn small(algo: Algo, out: &Path, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(algo);
    cfg.seed = seed;
    cfg.out = out.to_path_buf();
    cfg.budget = match algo {
        Algo::ValueIteration => 500,
        Algo::QLearning | Algo::Sarsa => 40,
        Algo::DynaQ => 4,
        Algo::Dqn => 1200,
        Algo::Reinforce | Algo::ActorCritic => 4,
        Algo::SelfPlay => 1,
        Algo::Cfr => 40,
        Algo::Maml => 15,
        Algo::Pbt => 2000,
        Algo::Evolve => 3,
    };
    match algo {
        Algo::Dqn => {
            cfg.set("hidden", "8").unwrap();
            cfg.set("max_episode_steps", "100").unwrap();
        }
        Algo::SelfPlay => {
            cfg.set("games", "3").unwrap();
            cfg.set("simulations", "10").unwrap();
            cfg.set("train_steps", "5").unwrap();
        }
        Algo::Pbt => {
            cfg.set("population", "4").unwrap();
            cfg.set("segment", "500").unwrap();
        }
        Algo::Evolve => cfg.set("population", "10").unwrap(),
        _ => {}
    }
    cfg
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn same_config_gives_byte_identical_metrics() {
    let root = tempfile::tempdir().unwrap();
    for algo in Algo::ALL {
        let a = root.path().join(format!("{algo}-a"));
        let b = root.path().join(format!("{algo}-b"));
        run_experiment(&small(algo, &a, 7)).unwrap();
        run_experiment(&small(algo, &b, 7)).unwrap();
        assert_eq!(read(&a, METRICS_FILE), read(&b, METRICS_FILE), "{algo}");
        assert_eq!(read(&a, CHECKPOINT_FILE), read(&b, CHECKPOINT_FILE), "{algo}");
    }
}

#[test]
fn metrics_files_carry_the_declared_header() {
    let root = tempfile::tempdir().unwrap();
    for algo in Algo::ALL {
        let dir = root.path().join(algo.id());
        run_experiment(&small(algo, &dir, 1)).unwrap();
        let text = read(&dir, METRICS_FILE);
        let header = text.lines().next().unwrap();
        assert_eq!(header, metrics_header(algo).join(","), "{algo}");
        let steps: Vec<u64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert!(!steps.is_empty(), "{algo} logged nothing");
        assert!(steps.windows(2).all(|w| w[0] < w[1]), "{algo} steps not increasing");
    }
}

#[test]
fn resolved_config_parses_back_equal() {
    let root = tempfile::tempdir().unwrap();
    for algo in Algo::ALL {
        let mut cfg = small(algo, &root.path().join(algo.id()), 11);
        cfg.budget = 0;
        run_experiment(&cfg).unwrap();
        assert_eq!(load_run(&cfg.out).unwrap(), cfg, "{algo}");
        let text = read(&cfg.out, CONFIG_FILE);
        for (key, _) in algo.defaults() {
            assert!(text.contains(&format!("\n{key} = ")), "{algo} config lacks {key}");
        }
    }
}

#[test]
fn zero_budget_writes_a_header_only_log() {
    let root = tempfile::tempdir().unwrap();
    for algo in Algo::ALL {
        let mut cfg = small(algo, &root.path().join(algo.id()), 0);
        cfg.budget = 0;
        let outcome = run_experiment(&cfg).unwrap();
        assert!(outcome.metrics.is_empty(), "{algo}");
        assert_eq!(read(&cfg.out, METRICS_FILE), format!("{}\n", metrics_header(algo).join(",")));
    }
}

#[test]
fn seeds_change_the_run() {
    let root = tempfile::tempdir().unwrap();
    let a = root.path().join("a");
    let b = root.path().join("b");
    run_experiment(&small(Algo::QLearning, &a, 1)).unwrap();
    run_experiment(&small(Algo::QLearning, &b, 2)).unwrap();
    assert_ne!(read(&a, METRICS_FILE), read(&b, METRICS_FILE));
}

#[test]
fn minimax_and_deep_mcts_always_draw() {
    let root = tempfile::tempdir().unwrap();
    let text = format!(
        "[tournament]\ngame = tictactoe\ngames = 10\nseed = 5\nout = {}\n[agents]\nminimax = minimax\nmcts = mcts 100000\n",
        root.path().display()
    );
    let result = tournament(&TournamentConfig::parse(&text).unwrap()).unwrap();
    assert_eq!(result.record(0, 1), Some((0, 10, 0)));
    let matrix = fs::read_to_string(root.path().join("matrix.csv")).unwrap();
    assert!(matrix.starts_with("agent,minimax,mcts,wins,draws,losses\n"), "{matrix}");
}

#[test]
fn reproduce_reports_seed_and_time() {
    let report = reproduce("A1", 3).unwrap();
    assert!(report.passed, "{report}");
    let line = report.to_string();
    assert!(line.starts_with("A1 PASS") && line.contains("seed 3"), "{line}");
    assert!(report.seconds > 0.0);
    assert!(matches!(reproduce("B2", 0), Err(RlError::Usage(_))));
}
