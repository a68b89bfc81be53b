//! Q-learning and SARSA on Taxi, scored by agreement with the exact optimal policy.

use rl_kernel::envs::{Environment, Taxi};
use rl_kernel::harness::run::scored_states;
use rl_kernel::rng::seeded;
use rl_kernel::tabular::{
    optimal_action_agreement, q_from_values, q_learning, sarsa, value_iteration, EpsilonSchedule, TdConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = Taxi::new();
    let mdp = env.exact_model().expect("taxi is tabular");
    let oracle = q_from_values(&mdp, &value_iteration(&mdp, 1e-8)?.values.values);
    let states = scored_states(&mdp);

    for episodes in [1_000, 5_000, 20_000] {
        let cfg = TdConfig {
            episodes,
            epsilon: EpsilonSchedule::constant(0.1),
            ..TdConfig::default()
        };
        let q = q_learning(&env, &cfg, &mut seeded(1))?;
        let s = sarsa(&env, &cfg, &mut seeded(2))?;
        println!(
            "{episodes:>6} episodes: Q-learning {:5.1}%, SARSA {:5.1}% optimal actions",
            100.0 * optimal_action_agreement(&q, &oracle, &states, 1e-6),
            100.0 * optimal_action_agreement(&s, &oracle, &states, 1e-6)
        );
    }
    Ok(())
}
