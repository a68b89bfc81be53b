//! REINFORCE and an advantage actor-critic on a three-armed Bernoulli bandit
//! and on CartPole.

use rl_kernel::harness::run::pg_bandit;
use rl_kernel::envs::{CartPole, Environment, VectorEnv};
use rl_kernel::policy::{
    actor_critic_train, reinforce_train, ActorCriticConfig, PolicyNet, ReinforceConfig, TargetSpec, ValueNet,
};
use rl_kernel::rng::seeded;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bandit = pg_bandit();
    let mut rng = seeded(4);
    let mut policy = PolicyNet::new(bandit.observation_width(), &[], bandit.num_actions(), &mut rng)?;
    let cfg = ReinforceConfig {
        lr: 0.1,
        episodes: 500,
        ..ReinforceConfig::default()
    };
    let log = reinforce_train(&bandit, &mut policy, &cfg, &mut rng)?;
    println!(
        "bandit REINFORCE: mean reward over the last 100 pulls {:.3}, final entropy {:.3}",
        log.recent_mean_return(100),
        log.rows.last().map_or(0.0, |r| r.policy_entropy)
    );

    let env = CartPole::new();
    let mut policy = PolicyNet::new(env.observation_width(), &[32], env.num_actions(), &mut rng)?;
    let mut value = ValueNet::new(env.observation_width(), &[32], &mut rng)?;
    let cfg = ActorCriticConfig {
        episodes: 500,
        target: TargetSpec::AdvantageNStep(5),
        ..ActorCriticConfig::default()
    };
    let log = actor_critic_train(&env, &mut policy, &mut value, &cfg, &mut rng)?;
    for chunk in log.rows.chunks(100) {
        let mean = chunk.iter().map(|r| r.episode_return).sum::<f64>() / chunk.len() as f64;
        println!(
            "cartpole actor-critic episodes {:>3}-{:>3}: mean length {mean:6.1}, value loss {:.3}",
            chunk[0].episode,
            chunk[chunk.len() - 1].episode,
            chunk[chunk.len() - 1].value_loss
        );
    }
    Ok(())
}
