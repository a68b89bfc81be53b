//! Dyna-Q: how many real environment steps Taxi needs with and without
//! simulated planning updates drawn from a learned model.

use rl_kernel::envs::{Environment, Taxi};
use rl_kernel::harness::run::scored_states;
use rl_kernel::rng::seeded;
use rl_kernel::tabular::{
    dyna_q_observed, optimal_action_agreement, q_from_values, value_iteration, DynaConfig, EpisodeStats, QTable,
    TdConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = Taxi::new();
    let mdp = env.exact_model().expect("taxi is tabular");
    let oracle = q_from_values(&mdp, &value_iteration(&mdp, 1e-8)?.values.values);
    let states = scored_states(&mdp);
    let td = TdConfig {
        episodes: 5_000,
        ..TdConfig::default()
    };

    for planning in [0, 5, 50] {
        let mut reached = None;
        let mut stop_at_90 = |stats: &EpisodeStats, q: &QTable| {
            if optimal_action_agreement(q, &oracle, &states, 1e-6) >= 0.9 {
                reached = Some(stats.total_steps);
                return false;
            }
            true
        };
        let (_, model) = dyna_q_observed(&env, &DynaConfig::new(td.clone(), planning), &mut seeded(7), &mut stop_at_90)?;
        match reached {
            Some(steps) => println!("planning {planning:>2}: 90% agreement after {steps} real steps"),
            None => println!("planning {planning:>2}: 90% agreement not reached"),
        }
        println!("            model knows {} state-action pairs", model.visited().len());
    }
    Ok(())
}
