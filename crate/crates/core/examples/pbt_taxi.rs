//! Population-based training of Q-learning's step size on Taxi, next to a
//! grid search with the same total number of environment steps.

use rl_kernel::envs::Taxi;
use rl_kernel::meta::{log_spaced, PbtConfig, TabularSetup};
use rl_kernel::rng::seeded;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = Taxi::new();
    let setup = TabularSetup {
        env: &env,
        gamma: 0.99,
        epsilon: 0.1,
        max_episode_steps: 200,
        eval_starts: Taxi::start_states(),
        eval_max_steps: 200,
    };
    let grid_alphas = log_spaced(0.01, 1.0, 16);
    let grid = setup.grid(&grid_alphas, 20_000, 1)?;
    for (a, score) in grid_alphas.iter().zip(&grid) {
        println!("grid alpha {a:.3}: score {score:8.2}");
    }
    let cfg = PbtConfig {
        segment_steps: 5_000,
        total_steps: 40_000,
        ..PbtConfig::default()
    };
    let run = setup.pbt(&log_spaced(0.01, 1.0, 8), &cfg, &mut seeded(1))?;
    let best = run.best_member();
    println!("PBT best member: alpha {:.3}, score {:.2}", best.hyper[0], best.score);
    let lineage = run.lineage_csv();
    println!("{} lineage events; last few:", lineage.len());
    for line in lineage.render().lines().rev().take(4) {
        println!("  {line}");
    }
    Ok(())
}
