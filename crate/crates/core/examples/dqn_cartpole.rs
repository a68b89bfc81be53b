//! DQN with experience replay and a periodically refreshed target network
//! balancing CartPole. Pass a step budget as the first argument (default 30000).

use rl_kernel::dqn::{dqn_train_observed, evaluate_q_net, DqnConfig};
use rl_kernel::envs::CartPole;
use rl_kernel::rng::seeded;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let steps = std::env::args().nth(1).map_or(Ok(30_000), |a| a.parse())?;
    let env = CartPole::new();
    let cfg = DqnConfig {
        steps,
        ..DqnConfig::default()
    };
    let run = dqn_train_observed(&env, &cfg, &mut seeded(0), 5_000, |step, net| {
        match evaluate_q_net(&env, net, 20, 500, &mut seeded(step as u64)) {
            Ok(len) => println!("step {step:>6}: greedy episode length {len:.1}"),
            Err(e) => eprintln!("evaluation failed: {e}"),
        }
        true
    })?;
    println!(
        "{} SGD updates, {} target refreshes, {} episodes",
        run.updates,
        run.target_refreshes,
        run.metrics.len()
    );
    Ok(())
}
