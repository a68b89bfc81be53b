//! Temporally extended actions: SMDP Q-learning over primitives plus
//! hallway options in the four-rooms grid.

use rl_kernel::envs::GridWorld;
use rl_kernel::rng::seeded;
use rl_kernel::tabular::options::greedy_success_rate;
use rl_kernel::tabular::{hallway_options, smdp_q_over_options, OptionsConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridWorld::four_rooms();
    let options = hallway_options(&grid);
    println!("{} hallway options", options.len());
    for episodes in [50, 200, 500] {
        let cfg = OptionsConfig {
            episodes,
            ..OptionsConfig::default()
        };
        let run = smdp_q_over_options(&grid, &options, &cfg, &mut seeded(3))?;
        let rate = greedy_success_rate(&grid, &options, &run.q, grid.start_states(), 500, &mut seeded(0))?;
        println!(
            "{episodes:>4} episodes: {} decisions over {} primitive steps, greedy success {:.0}%",
            run.decisions,
            run.steps,
            100.0 * rate
        );
    }
    Ok(())
}
