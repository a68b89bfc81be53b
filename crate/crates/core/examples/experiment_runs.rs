//! Config-driven runs as the `rlk` binary performs them: build a config,
//! train, evaluate the checkpoint, and reload the run directory.

use rl_kernel::harness::{evaluate, load_run, run_experiment, Algo, EnvId, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut cfg = ExperimentConfig::new(Algo::QLearning).with_env(EnvId::FourRooms)?;
    cfg.seed = 3;
    cfg.budget = 300;
    cfg.out = dir.path().join("q-four-rooms");
    cfg.set("alpha", "0.25")?;
    println!("config:\n{}", cfg.render());

    let outcome = run_experiment(&cfg)?;
    println!("{} metric rows; files:", outcome.metrics.len());
    for f in &outcome.files {
        println!("  {}", f.display());
    }
    let reloaded = load_run(&cfg.out)?;
    assert_eq!(reloaded, cfg);
    for (k, v) in evaluate(&reloaded, 50)? {
        println!("{k} = {v:.4}");
    }
    Ok(())
}
