//! Deep Q-learning: experience replay, a periodically cloned target
//! network, and an optional double-DQN target.

use std::path::Path;

use rand::Rng;

use crate::dist::argmax;
use crate::envs::VectorEnv;
use crate::error::{contract, invalid, Result};
use crate::io::CsvTable;
use crate::neural::{Activation, Gradient, InitScale, Mlp};
use crate::rng::SeededRng;
use crate::tabular::EpsilonSchedule;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Fixed-capacity FIFO of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Slot the next push overwrites once full.
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return invalid("replay capacity must be positive");
        }
        Ok(Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Uniform draws with replacement; `batch` may exceed `len()`.
    pub fn sample(&self, batch: usize, rng: &mut SeededRng) -> Result<Vec<&Transition>> {
        if self.items.is_empty() {
            return contract("sampling from an empty replay buffer");
        }
        Ok((0..batch)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect())
    }

    /// Contents from oldest to newest.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(&self.items[..split])
    }
}

/// A frozen copy of the online network, refreshed by hard copy.
#[derive(Debug, Clone)]
pub struct TargetNet {
    net: Mlp,
    refreshes: usize,
}

impl TargetNet {
    pub fn new(online: &Mlp) -> Self {
        Self {
            net: online.clone(),
            refreshes: 0,
        }
    }

    pub fn refresh(&mut self, online: &Mlp) {
        self.net = online.clone();
        self.refreshes += 1;
    }

    pub fn refreshes(&self) -> usize {
        self.refreshes
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdMode {
    Dqn,
    /// The online network picks the next action, the target network scores it.
    DoubleDqn,
}

pub fn td_target(t: &Transition, target: &TargetNet, gamma: f64, mode: TdMode, online: &Mlp) -> Result<f64> {
    if t.terminal {
        return Ok(t.reward);
    }
    let next = target.net.forward(&t.next_state)?;
    let bootstrap = match mode {
        TdMode::Dqn => next.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        TdMode::DoubleDqn => next[argmax(&online.forward(&t.next_state)?)],
    };
    Ok(t.reward + gamma * bootstrap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqnConfig {
    /// Hidden widths; empty gives a linear Q function.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub gamma: f64,
    pub lr: f64,
    pub capacity: usize,
    pub batch: usize,
    /// Gradient updates between target refreshes.
    pub target_refresh: usize,
    /// Decayed over `steps`.
    pub epsilon: EpsilonSchedule,
    pub steps: usize,
    pub mode: TdMode,
    /// Transitions stored before learning starts; `None` means max(batch, 1000).
    pub warmup: Option<usize>,
    pub max_episode_steps: usize,
    /// Rescale each minibatch gradient to at most this norm.
    pub grad_clip: Option<f64>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            activation: Activation::Relu,
            gamma: 0.99,
            lr: 0.01,
            capacity: 50_000,
            batch: 32,
            target_refresh: 500,
            epsilon: EpsilonSchedule::linear(1.0, 0.05, 0.1),
            steps: 150_000,
            mode: TdMode::Dqn,
            warmup: None,
            max_episode_steps: 500,
            grad_clip: None,
        }
    }
}

impl DqnConfig {
    /// Never more than the buffer can hold.
    pub fn warmup_steps(&self) -> usize {
        self.warmup.unwrap_or_else(|| self.batch.max(1000)).min(self.capacity)
    }

    fn validate(&self) -> Result<()> {
        if self.capacity == 0 || self.batch == 0 || self.target_refresh == 0 || self.steps == 0 {
            return invalid("dqn counts must be positive");
        }
        if !(self.lr > 0.0) || !(0.0..=1.0).contains(&self.gamma) {
            return invalid("dqn needs lr > 0 and gamma in [0, 1]");
        }
        Ok(())
    }

    pub fn build_net(&self, inputs: usize, outputs: usize, rng: &mut SeededRng) -> Result<Mlp> {
        let mut sizes = vec![inputs];
        sizes.extend(&self.hidden);
        sizes.push(outputs);
        let mut acts = vec![self.activation; sizes.len() - 1];
        *acts.last_mut().expect("at least one layer") = Activation::Identity;
        Mlp::new(&sizes, &acts, InitScale::FanIn, rng)
    }
}

/// One row per finished episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqnMetric {
    pub step: usize,
    pub episode_return: f64,
    pub epsilon: f64,
    /// Mean squared TD error of the updates made during the episode.
    pub mean_td_loss: f64,
    pub target_refresh_count: usize,
}

#[derive(Debug, Clone)]
pub struct DqnRun {
    pub net: Mlp,
    pub metrics: Vec<DqnMetric>,
    pub updates: usize,
    pub target_refreshes: usize,
    pub steps: usize,
}

impl DqnRun {
    pub fn metrics_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["step", "episode_return", "epsilon", "mean_td_loss", "target_refresh_count"]);
        for m in &self.metrics {
            t.push([
                m.step.to_string(),
                m.episode_return.to_string(),
                m.epsilon.to_string(),
                m.mean_td_loss.to_string(),
                m.target_refresh_count.to_string(),
            ]);
        }
        t
    }

    pub fn save_metrics(&self, path: impl AsRef<Path>) -> Result<()> {
        self.metrics_csv().save(path)
    }
}

pub fn dqn_train<E: VectorEnv>(env: &E, cfg: &DqnConfig, rng: &mut SeededRng) -> Result<DqnRun> {
    dqn_train_observed(env, cfg, rng, 0, |_, _| true)
}

/// DQN training loop. Every `check_every` steps (if non-zero), `check`
/// receives the step count and online network and may stop training.
pub fn dqn_train_observed<E, F>(
    env: &E,
    cfg: &DqnConfig,
    rng: &mut SeededRng,
    check_every: usize,
    mut check: F,
) -> Result<DqnRun>
where
    E: VectorEnv,
    F: FnMut(usize, &Mlp) -> bool,
{
    cfg.validate()?;
    let width = env.observation_width();
    let num_actions = env.num_actions();
    let mut online = cfg.build_net(width, num_actions, rng)?;
    let mut target = TargetNet::new(&online);
    let mut buffer = ReplayBuffer::new(cfg.capacity)?;
    let warmup = cfg.warmup_steps();
    let mut run_metrics = Vec::new();
    let mut updates = 0;

    let mut current = env.reset(rng);
    let mut obs = env.observe(&current.state);
    let mut episode_steps = 0;
    let mut episode_return = 0.0;
    let mut loss_sum = 0.0;
    let mut loss_count = 0;
    let mut step = 0;
    while step < cfg.steps {
        let epsilon = cfg.epsilon.at(step, cfg.steps);
        let action = if rng.random::<f64>() < epsilon {
            current.legal_actions[rng.random_range(0..current.legal_actions.len())]
        } else {
            greedy_legal(&online.forward(&obs)?, &current.legal_actions)
        };
        let next = env.step(&current.state, action, rng)?;
        let next_obs = env.observe(&next.state);
        buffer.push(Transition {
            state: obs,
            action,
            reward: next.reward,
            next_state: next_obs.clone(),
            terminal: next.terminal,
        });
        step += 1;
        episode_steps += 1;
        episode_return += next.reward;

        if buffer.len() >= warmup {
            let batch = buffer.sample(cfg.batch, rng)?;
            let mut grad = Gradient::zeros(online.num_params());
            let k = 1.0 / batch.len() as f64;
            for t in &batch {
                let y = td_target(t, &target, cfg.gamma, cfg.mode, &online)?;
                let trace = online.forward_trace(&t.state)?;
                let err = trace.output()[t.action] - y;
                loss_sum += err * err;
                loss_count += 1;
                let mut d = vec![0.0; num_actions];
                d[t.action] = err;
                online.accumulate_params(&trace, &d, k, &mut grad);
            }
            if let Some(c) = cfg.grad_clip {
                grad.clip_norm(c);
            }
            online.sgd_update(&grad, cfg.lr)?;
            updates += 1;
            if updates % cfg.target_refresh == 0 {
                target.refresh(&online);
            }
        }

        if next.done() || episode_steps >= cfg.max_episode_steps {
            run_metrics.push(DqnMetric {
                step,
                episode_return,
                epsilon,
                mean_td_loss: if loss_count > 0 { loss_sum / loss_count as f64 } else { 0.0 },
                target_refresh_count: target.refreshes(),
            });
            current = env.reset(rng);
            obs = env.observe(&current.state);
            episode_steps = 0;
            episode_return = 0.0;
            loss_sum = 0.0;
            loss_count = 0;
        } else {
            current = next;
            obs = next_obs;
        }
        if check_every > 0 && step % check_every == 0 && !check(step, &online) {
            break;
        }
    }
    Ok(DqnRun {
        net: online,
        metrics: run_metrics,
        updates,
        target_refreshes: target.refreshes(),
        steps: step,
    })
}

fn greedy_legal(q: &[f64], legal: &[usize]) -> usize {
    let mut best = legal[0];
    for &a in &legal[1..] {
        if q[a] > q[best] {
            best = a;
        }
    }
    best
}

/// Mean undiscounted return of the greedy policy over `episodes` episodes.
pub fn evaluate_q_net<E: VectorEnv>(
    env: &E,
    net: &Mlp,
    episodes: usize,
    max_steps: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    if episodes == 0 {
        return invalid("evaluation needs at least one episode");
    }
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut current = env.reset(rng);
        let mut steps = 0;
        while !current.done() && steps < max_steps {
            let obs = env.observe(&current.state);
            let a = greedy_legal(&net.forward(&obs)?, &current.legal_actions);
            current = env.step(&current.state, a, rng)?;
            total += current.reward;
            steps += 1;
        }
    }
    Ok(total / episodes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Bandit, GridWorld, OneHot};
    use crate::rng::seeded;

    fn tr(tag: f64) -> Transition {
        Transition {
            state: vec![tag],
            action: 0,
            reward: tag,
            next_state: vec![tag],
            terminal: false,
        }
    }

    #[test]
    fn fifo_at_capacity() {
        let mut b = ReplayBuffer::new(2).unwrap();
        for x in [1.0, 2.0, 3.0] {
            b.push(tr(x));
        }
        let order: Vec<f64> = b.iter_oldest_first().map(|t| t.reward).collect();
        assert_eq!(order, vec![2.0, 3.0]);
        b.push(tr(4.0));
        let order: Vec<f64> = b.iter_oldest_first().map(|t| t.reward).collect();
        assert_eq!(order, vec![3.0, 4.0]);
    }

    #[test]
    fn size_is_capped() {
        let mut b = ReplayBuffer::new(10_000).unwrap();
        for i in 0..100_000 {
            b.push(tr(i as f64));
        }
        assert_eq!(b.len(), 10_000);
        assert_eq!(b.iter_oldest_first().next().unwrap().reward, 90_000.0);
    }

    #[test]
    fn sampling_contract() {
        let mut b = ReplayBuffer::new(4).unwrap();
        assert!(b.sample(1, &mut seeded(0)).is_err());
        b.push(tr(7.0));
        assert_eq!(b.sample(1, &mut seeded(0)).unwrap()[0].reward, 7.0);
        assert_eq!(b.sample(5, &mut seeded(0)).unwrap().len(), 5);
        for x in [1.0, 2.0, 3.0] {
            b.push(tr(x));
        }
        let a: Vec<f64> = b.sample(20, &mut seeded(3)).unwrap().iter().map(|t| t.reward).collect();
        let c: Vec<f64> = b.sample(20, &mut seeded(3)).unwrap().iter().map(|t| t.reward).collect();
        assert_eq!(a, c);
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let mut b = ReplayBuffer::new(4).unwrap();
        for x in 0..4 {
            b.push(tr(x as f64));
        }
        let mut rng = seeded(11);
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[b.sample(1, &mut rng).unwrap()[0].reward as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((0.24..=0.26).contains(&f), "{f}");
        }
    }

    /// Output layer only: a 1-input identity net whose biases are the Q values.
    fn constant_q(values: &[f64]) -> Mlp {
        let mut net = Mlp::zeros(&[1, values.len()], &[Activation::Identity]).unwrap();
        for (a, v) in values.iter().enumerate() {
            net.set_bias(0, a, *v);
        }
        net
    }

    #[test]
    fn td_target_examples() {
        let target = TargetNet::new(&constant_q(&[1.0, 3.0]));
        let online = constant_q(&[5.0, 0.0]);
        let mut t = tr(0.0);
        t.reward = 0.5;
        let gamma = 0.9;
        assert_eq!(td_target(&t, &target, gamma, TdMode::Dqn, &online).unwrap(), 0.5 + 3.0 * gamma);
        assert_eq!(td_target(&t, &target, gamma, TdMode::DoubleDqn, &online).unwrap(), 0.5 + 1.0 * gamma);
        assert_eq!(td_target(&t, &target, 0.0, TdMode::Dqn, &online).unwrap(), 0.5);
        t.terminal = true;
        assert_eq!(td_target(&t, &target, gamma, TdMode::Dqn, &online).unwrap(), 0.5);
    }

    #[test]
    fn double_target_never_exceeds_dqn_target() {
        let mut rng = seeded(5);
        for _ in 0..200 {
            let a = Mlp::new(&[3, 5, 4], &[Activation::Relu, Activation::Identity], InitScale::Fixed(1.0), &mut rng).unwrap();
            let b = Mlp::new(&[3, 5, 4], &[Activation::Relu, Activation::Identity], InitScale::Fixed(1.0), &mut rng).unwrap();
            let t = Transition {
                state: vec![0.0; 3],
                action: 0,
                reward: rng.random_range(-1.0..1.0),
                next_state: (0..3).map(|_| rng.random_range(-2.0..2.0)).collect(),
                terminal: false,
            };
            let target = TargetNet::new(&a);
            let plain = td_target(&t, &target, 0.95, TdMode::Dqn, &b).unwrap();
            let double = td_target(&t, &target, 0.95, TdMode::DoubleDqn, &b).unwrap();
            assert!(double <= plain);
        }
    }

    #[test]
    fn target_stays_frozen_between_refreshes() {
        let mut rng = seeded(2);
        let mut online = Mlp::new(&[2, 4, 2], &[Activation::Tanh, Activation::Identity], InitScale::FanIn, &mut rng).unwrap();
        let mut target = TargetNet::new(&online);
        let t = Transition {
            state: vec![0.5, -0.5],
            action: 1,
            reward: 0.1,
            next_state: vec![0.2, 0.3],
            terminal: false,
        };
        let frozen = td_target(&t, &target, 0.9, TdMode::Dqn, &online).unwrap();
        for _ in 0..50 {
            let (_, g) = online.backward(&t.state, &crate::neural::Loss::Mse(vec![1.0, -1.0])).unwrap();
            online.sgd_update(&g, 0.1).unwrap();
            assert_eq!(td_target(&t, &target, 0.9, TdMode::Dqn, &online).unwrap(), frozen);
        }
        target.refresh(&online);
        assert_ne!(td_target(&t, &target, 0.9, TdMode::Dqn, &online).unwrap(), frozen);
        assert_eq!(target.refreshes(), 1);
    }

    #[test]
    fn learns_a_bandit_and_is_reproducible() {
        let env = Bandit::deterministic(vec![0.0, 1.0, 0.5]).unwrap();
        let cfg = DqnConfig {
            hidden: vec![],
            lr: 0.1,
            steps: 3000,
            capacity: 500,
            target_refresh: 50,
            ..DqnConfig::default()
        };
        let a = dqn_train(&env, &cfg, &mut seeded(4)).unwrap();
        let q = a.net.forward(&[1.0]).unwrap();
        assert!((q[1] - 1.0).abs() < 0.05 && (q[2] - 0.5).abs() < 0.05, "{q:?}");
        let b = dqn_train(&env, &cfg, &mut seeded(4)).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.metrics_csv().render(), b.metrics_csv().render());
        assert!(a.target_refreshes > 0);
    }

    #[test]
    fn warmup_delays_learning() {
        let env = OneHot(GridWorld::parse("S..G\n").unwrap());
        let cfg = DqnConfig {
            hidden: vec![],
            steps: 999,
            ..DqnConfig::default()
        };
        let run = dqn_train(&env, &cfg, &mut seeded(0)).unwrap();
        assert_eq!(cfg.warmup_steps(), 1000);
        assert_eq!(run.updates, 0);
    }
}
