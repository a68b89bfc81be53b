//! Policy-gradient methods on softmax policies: the score-function
//! estimator, REINFORCE, n-step actor-critic and the PPO clipped surrogate.

use std::path::Path;

use crate::dist::{sample_probs, softmax_vec};
use crate::envs::VectorEnv;
use crate::error::{invalid, Result};
use crate::io::CsvTable;
use crate::neural::{Activation, Gradient, InitScale, Mlp};
use crate::rng::SeededRng;

/// How the score-function gradient is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Exact,
    Sampled(usize),
}

/// Gradient of `E_{x ~ softmax(logits)}[f(x)]` with respect to the logits,
/// through `E[f(x) grad log p(x)]`; `grad log p(x) = e_x - p` for a softmax.
pub fn score_function_gradient(
    logits: &[f64],
    payoffs: &[f64],
    mode: Estimator,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    score_function_gradient_with_baseline(logits, payoffs, 0.0, mode, rng)
}

/// As [`score_function_gradient`] with `f(x) - baseline` in place of `f(x)`.
pub fn score_function_gradient_with_baseline(
    logits: &[f64],
    payoffs: &[f64],
    baseline: f64,
    mode: Estimator,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    if logits.len() != payoffs.len() || logits.is_empty() {
        return invalid(format!(
            "{} logits for {} payoffs",
            logits.len(),
            payoffs.len()
        ));
    }
    if logits.iter().chain(payoffs).any(|v| !v.is_finite()) {
        return invalid("non-finite logits or payoffs");
    }
    let p = softmax_vec(logits);
    let n = p.len();
    let mut grad = vec![0.0; n];
    let mut add = |x: usize, weight: f64| {
        let f = weight * (payoffs[x] - baseline);
        for j in 0..n {
            grad[j] -= f * p[j];
        }
        grad[x] += f;
    };
    match mode {
        Estimator::Exact => {
            for x in 0..n {
                add(x, p[x]);
            }
        }
        Estimator::Sampled(0) => return invalid("sampled estimator needs at least one draw"),
        Estimator::Sampled(m) => {
            let w = 1.0 / m as f64;
            for _ in 0..m {
                add(sample_probs(&p, rng), w);
            }
        }
    }
    Ok(grad)
}

/// Softmax restricted to `legal`; other actions get probability 0.
pub fn masked_softmax(logits: &[f64], legal: &[usize]) -> Vec<f64> {
    if legal.len() == logits.len() {
        return softmax_vec(logits);
    }
    let sub: Vec<f64> = legal.iter().map(|a| logits[*a]).collect();
    let mut p = vec![0.0; logits.len()];
    for (a, q) in legal.iter().zip(softmax_vec(&sub)) {
        p[*a] = q;
    }
    p
}

fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// `dL/dlogits` for `L = -psi log p(a) - eta H(p)`.
fn policy_loss_grad(p: &[f64], action: usize, psi: f64, eta: f64) -> Vec<f64> {
    let h = entropy_of(p);
    (0..p.len())
        .map(|j| {
            let indicator = if j == action { 1.0 } else { 0.0 };
            let entropy_term = if p[j] > 0.0 { p[j] * (p[j].ln() + h) } else { 0.0 };
            -psi * (indicator - p[j]) + eta * entropy_term
        })
        .collect()
}

/// A softmax policy over an MLP's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    pub net: Mlp,
}

impl PolicyNet {
    /// Tanh hidden layers and a linear logit layer.
    pub fn new(obs_width: usize, hidden: &[usize], num_actions: usize, rng: &mut SeededRng) -> Result<Self> {
        let mut sizes = vec![obs_width];
        sizes.extend_from_slice(hidden);
        sizes.push(num_actions);
        Ok(Self {
            net: Mlp::with_hidden(&sizes, Activation::Tanh, rng)?,
        })
    }

    /// A policy with all-zero parameters (uniform over actions).
    pub fn uniform(obs_width: usize, num_actions: usize) -> Result<Self> {
        Ok(Self {
            net: Mlp::zeros(&[obs_width, num_actions], &[Activation::Identity])?,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.net.output_width()
    }

    pub fn probs(&self, obs: &[f64], legal: &[usize]) -> Result<Vec<f64>> {
        if legal.is_empty() {
            return invalid("no legal actions");
        }
        Ok(masked_softmax(&self.net.forward(obs)?, legal))
    }

    pub fn sample(&self, obs: &[f64], legal: &[usize], rng: &mut SeededRng) -> Result<usize> {
        Ok(sample_probs(&self.probs(obs, legal)?, rng))
    }

    pub fn greedy(&self, obs: &[f64], legal: &[usize]) -> Result<usize> {
        Ok(crate::dist::argmax(&self.probs(obs, legal)?))
    }
}

/// A scalar state-value estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet {
    pub net: Mlp,
}

impl ValueNet {
    pub fn new(obs_width: usize, hidden: &[usize], rng: &mut SeededRng) -> Result<Self> {
        let mut sizes = vec![obs_width];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Ok(Self {
            net: Mlp::with_hidden(&sizes, Activation::Tanh, rng)?,
        })
    }

    pub fn zeros(obs_width: usize) -> Result<Self> {
        Ok(Self {
            net: Mlp::new(&[obs_width, 1], &[Activation::Identity], InitScale::Fixed(0.0), &mut crate::rng::seeded(0))?,
        })
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.net.forward(obs)?[0])
    }
}

/// What the policy gradient weights `grad log pi(a_t|s_t)` by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSpec {
    /// The discounted return from `t`.
    MonteCarlo,
    /// `sum_{k<n} gamma^k r_{t+k} + gamma^n V(s_{t+n})`.
    NStep(usize),
    /// Return minus `V(s_t)`.
    AdvantageMc,
    /// n-step target minus `V(s_t)`.
    AdvantageNStep(usize),
}

impl TargetSpec {
    fn validate(self) -> Result<()> {
        match self {
            TargetSpec::NStep(0) | TargetSpec::AdvantageNStep(0) => invalid("n-step targets need n >= 1"),
            _ => Ok(()),
        }
    }

    fn horizon(self) -> Option<usize> {
        match self {
            TargetSpec::NStep(n) | TargetSpec::AdvantageNStep(n) => Some(n),
            _ => None,
        }
    }

    fn subtracts_baseline(self) -> bool {
        matches!(self, TargetSpec::AdvantageMc | TargetSpec::AdvantageNStep(_))
    }
}

/// n-step targets for an episode of `rewards.len()` steps.
///
/// `values[t]` estimates the state before step `t`; `values[T]` is the
/// bootstrap for the state after the last step (0 if it is terminal).
/// Windows that run past the end stop there and bootstrap from `values[T]`,
/// so `n >= T` on a terminated episode gives the Monte Carlo return.
pub fn nstep_targets(rewards: &[f64], values: &[f64], gamma: f64, n: usize) -> Vec<f64> {
    let t_len = rewards.len();
    debug_assert_eq!(values.len(), t_len + 1);
    (0..t_len)
        .map(|t| {
            let end = (t + n).min(t_len);
            let mut g = 0.0;
            let mut discount = 1.0;
            for r in &rewards[t..end] {
                g += discount * r;
                discount *= gamma;
            }
            g + discount * values[end]
        })
        .collect()
}

/// Discounted return-to-go from each step.
pub fn returns_from(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut g = 0.0;
    for t in (0..rewards.len()).rev() {
        g = rewards[t] + gamma * g;
        out[t] = g;
    }
    out
}

/// One episode's worth of experience.
#[derive(Debug, Clone)]
pub struct Episode {
    pub observations: Vec<Vec<f64>>,
    pub legal: Vec<Vec<usize>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Observation after the last step.
    pub final_observation: Vec<f64>,
    pub terminal: bool,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

pub fn run_episode<E: VectorEnv>(
    env: &E,
    policy: &PolicyNet,
    max_steps: usize,
    rng: &mut SeededRng,
) -> Result<Episode> {
    let mut current = env.reset(rng);
    let mut ep = Episode {
        observations: Vec::new(),
        legal: Vec::new(),
        actions: Vec::new(),
        rewards: Vec::new(),
        final_observation: Vec::new(),
        terminal: false,
    };
    while !current.done() && ep.actions.len() < max_steps {
        let obs = env.observe(&current.state);
        let action = policy.sample(&obs, &current.legal_actions, rng)?;
        let next = env.step(&current.state, action, rng)?;
        ep.observations.push(obs);
        ep.legal.push(current.legal_actions.clone());
        ep.actions.push(action);
        ep.rewards.push(next.reward);
        current = next;
    }
    ep.terminal = current.terminal;
    ep.final_observation = env.observe(&current.state);
    Ok(ep)
}

/// Per-episode training record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub episode_return: f64,
    /// Mean policy entropy over the visited states.
    pub policy_entropy: f64,
    /// Summed squared-error loss of the critic, 0 without one.
    pub value_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<EpisodeRow>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["episode", "return", "policy_entropy", "value_loss"]);
        for r in &self.rows {
            t.push([
                r.episode.to_string(),
                r.episode_return.to_string(),
                r.policy_entropy.to_string(),
                r.value_loss.to_string(),
            ]);
        }
        t
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_csv().save(path)
    }

    /// Mean return over the last `k` episodes.
    pub fn recent_mean_return(&self, k: usize) -> f64 {
        let tail = &self.rows[self.rows.len().saturating_sub(k)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|r| r.episode_return).sum::<f64>() / tail.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReinforceConfig {
    pub lr: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub entropy_coef: f64,
    pub max_steps: usize,
    /// Subtract the episode's mean return from every step's weight.
    pub normalize_returns: bool,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self {
            lr: 0.0005,
            gamma: 0.99,
            episodes: 1000,
            entropy_coef: 0.0,
            max_steps: 500,
            normalize_returns: false,
        }
    }
}

/// Adds the policy-loss gradient of one step into `grad`; returns the
/// entropy of the policy at that step.
fn policy_step_grad(
    policy: &PolicyNet,
    obs: &[f64],
    legal: &[usize],
    action: usize,
    psi: f64,
    eta: f64,
    grad: &mut Gradient,
) -> Result<f64> {
    let trace = policy.net.forward_trace(obs)?;
    let p = masked_softmax(trace.output(), legal);
    let d = policy_loss_grad(&p, action, psi, eta);
    policy.net.accumulate_params(&trace, &d, 1.0, grad);
    Ok(entropy_of(&p))
}

/// Monte Carlo policy gradient: after each episode, one step along
/// `sum_t G_t grad log pi(a_t|s_t) + eta sum_t grad H(pi(.|s_t))`.
pub fn reinforce_train<E: VectorEnv>(
    env: &E,
    policy: &mut PolicyNet,
    cfg: &ReinforceConfig,
    rng: &mut SeededRng,
) -> Result<TrainingLog> {
    if cfg.episodes == 0 || cfg.entropy_coef < 0.0 || !(cfg.lr > 0.0) {
        return invalid("reinforce needs episodes >= 1, lr > 0 and a non-negative entropy weight");
    }
    if policy.num_actions() != env.num_actions() {
        return invalid("policy head width differs from the action count");
    }
    let mut log = TrainingLog::default();
    for episode in 0..cfg.episodes {
        let ep = run_episode(env, policy, cfg.max_steps, rng)?;
        let mut weights = returns_from(&ep.rewards, cfg.gamma);
        if cfg.normalize_returns && !weights.is_empty() {
            let mean = weights.iter().sum::<f64>() / weights.len() as f64;
            for w in &mut weights {
                *w -= mean;
            }
        }
        let mut grad = Gradient::zeros(policy.net.num_params());
        let mut entropy = 0.0;
        for t in 0..ep.len() {
            entropy += policy_step_grad(
                policy,
                &ep.observations[t],
                &ep.legal[t],
                ep.actions[t],
                weights[t],
                cfg.entropy_coef,
                &mut grad,
            )?;
        }
        policy.net.sgd_update(&grad, cfg.lr)?;
        log.rows.push(EpisodeRow {
            episode,
            episode_return: ep.total_reward(),
            policy_entropy: entropy / ep.len().max(1) as f64,
            value_loss: 0.0,
        });
    }
    Ok(log)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCriticConfig {
    pub policy_lr: f64,
    pub value_lr: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub entropy_coef: f64,
    pub max_steps: usize,
    pub target: TargetSpec,
}

impl Default for ActorCriticConfig {
    fn default() -> Self {
        Self {
            policy_lr: 0.001,
            value_lr: 0.001,
            gamma: 0.99,
            episodes: 1000,
            entropy_coef: 0.0,
            max_steps: 500,
            target: TargetSpec::AdvantageNStep(5),
        }
    }
}

/// Targets `Q_hat` and policy weights `psi` for one episode.
pub fn actor_critic_weights(
    ep: &Episode,
    value: &ValueNet,
    target: TargetSpec,
    gamma: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut values = Vec::with_capacity(ep.len() + 1);
    for obs in &ep.observations {
        values.push(value.value(obs)?);
    }
    values.push(if ep.terminal {
        0.0
    } else {
        value.value(&ep.final_observation)?
    });
    let targets = match target.horizon() {
        Some(n) => nstep_targets(&ep.rewards, &values, gamma, n),
        None => {
            // Monte Carlo, still bootstrapping a truncated tail
            nstep_targets(&ep.rewards, &values, gamma, ep.len().max(1))
        }
    };
    let psi = if target.subtracts_baseline() {
        targets.iter().zip(&values).map(|(q, v)| q - v).collect()
    } else {
        targets.clone()
    };
    Ok((targets, psi))
}

/// Actor-critic with separate policy and value networks, batched per episode.
pub fn actor_critic_train<E: VectorEnv>(
    env: &E,
    policy: &mut PolicyNet,
    value: &mut ValueNet,
    cfg: &ActorCriticConfig,
    rng: &mut SeededRng,
) -> Result<TrainingLog> {
    cfg.target.validate()?;
    if cfg.episodes == 0 || !(cfg.policy_lr > 0.0) || !(cfg.value_lr > 0.0) {
        return invalid("actor-critic needs episodes >= 1 and positive learning rates");
    }
    if policy.num_actions() != env.num_actions() {
        return invalid("policy head width differs from the action count");
    }
    let mut log = TrainingLog::default();
    for episode in 0..cfg.episodes {
        let ep = run_episode(env, policy, cfg.max_steps, rng)?;
        let (targets, psi) = actor_critic_weights(&ep, value, cfg.target, cfg.gamma)?;
        let mut pgrad = Gradient::zeros(policy.net.num_params());
        let mut vgrad = Gradient::zeros(value.net.num_params());
        let mut entropy = 0.0;
        let mut value_loss = 0.0;
        for t in 0..ep.len() {
            entropy += policy_step_grad(
                policy,
                &ep.observations[t],
                &ep.legal[t],
                ep.actions[t],
                psi[t],
                cfg.entropy_coef,
                &mut pgrad,
            )?;
            let trace = value.net.forward_trace(&ep.observations[t])?;
            let err = trace.output()[0] - targets[t];
            value_loss += 0.5 * err * err;
            value.net.accumulate_params(&trace, &[err], 1.0, &mut vgrad);
        }
        policy.net.sgd_update(&pgrad, cfg.policy_lr)?;
        value.net.sgd_update(&vgrad, cfg.value_lr)?;
        log.rows.push(EpisodeRow {
            episode,
            episode_return: ep.total_reward(),
            policy_entropy: entropy / ep.len().max(1) as f64,
            value_loss,
        });
    }
    Ok(log)
}

/// `min(rho A, clip(rho, 1 - eps, 1 + eps) A)`.
pub fn ppo_clip_loss(ratio: f64, advantage: f64, clip: f64) -> f64 {
    debug_assert!(clip > 0.0 && clip < 1.0 && ratio > 0.0);
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    (ratio * advantage).min(clipped * advantage)
}

/// Derivative of [`ppo_clip_loss`] with respect to the ratio: `A` where the
/// unclipped term is the minimum, 0 where the clipped one is.
pub fn ppo_clip_grad(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    if ratio * advantage <= clipped * advantage {
        advantage
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub lr: f64,
    pub gamma: f64,
    pub clip: f64,
    pub iterations: usize,
    pub episodes_per_iteration: usize,
    pub epochs: usize,
    pub max_steps: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            lr: 0.05,
            gamma: 0.99,
            clip: 0.2,
            iterations: 50,
            episodes_per_iteration: 16,
            epochs: 4,
            max_steps: 200,
        }
    }
}

/// A small PPO-clip trainer: collect a batch with the current policy, use
/// return minus the batch mean as the advantage, then take `epochs`
/// gradient-ascent steps on the mean clipped surrogate.
pub fn ppo_train<E: VectorEnv>(
    env: &E,
    policy: &mut PolicyNet,
    cfg: &PpoConfig,
    rng: &mut SeededRng,
) -> Result<TrainingLog> {
    if !(cfg.clip > 0.0 && cfg.clip < 1.0) || cfg.episodes_per_iteration == 0 || !(cfg.lr > 0.0) {
        return invalid("ppo needs clip in (0, 1), lr > 0 and a non-empty batch");
    }
    let mut log = TrainingLog::default();
    for _ in 0..cfg.iterations {
        let mut steps = Vec::new();
        for _ in 0..cfg.episodes_per_iteration {
            let ep = run_episode(env, policy, cfg.max_steps, rng)?;
            let returns = returns_from(&ep.rewards, cfg.gamma);
            let mut entropy = 0.0;
            for t in 0..ep.len() {
                let p = policy.probs(&ep.observations[t], &ep.legal[t])?;
                entropy += entropy_of(&p);
                steps.push((ep.observations[t].clone(), ep.legal[t].clone(), ep.actions[t], returns[t], p[ep.actions[t]]));
            }
            log.rows.push(EpisodeRow {
                episode: log.rows.len(),
                episode_return: ep.total_reward(),
                policy_entropy: entropy / ep.len().max(1) as f64,
                value_loss: 0.0,
            });
        }
        if steps.is_empty() {
            continue;
        }
        let mean = steps.iter().map(|s| s.3).sum::<f64>() / steps.len() as f64;
        let k = 1.0 / steps.len() as f64;
        for _ in 0..cfg.epochs {
            let mut grad = Gradient::zeros(policy.net.num_params());
            for (obs, legal, action, ret, old_p) in &steps {
                let trace = policy.net.forward_trace(obs)?;
                let p = masked_softmax(trace.output(), legal);
                let ratio = p[*action] / old_p;
                let dsurrogate = ppo_clip_grad(ratio, ret - mean, cfg.clip);
                if dsurrogate == 0.0 {
                    continue;
                }
                // d ratio / d logits = ratio (e_a - p); descend the negated surrogate
                let d: Vec<f64> = (0..p.len())
                    .map(|j| {
                        let indicator = if j == *action { 1.0 } else { 0.0 };
                        -dsurrogate * ratio * (indicator - p[j])
                    })
                    .collect();
                policy.net.accumulate_params(&trace, &d, k, &mut grad);
            }
            policy.net.sgd_update(&grad, cfg.lr)?;
        }
    }
    Ok(log)
}
