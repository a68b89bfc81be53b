//! Dyna-Q: Q-learning on real steps plus planning updates on imagined ones.

use rand::Rng;

use super::td::{q_learning_update, EpisodeStats, NoObserver, Observer, StepRecord, TdConfig};
use super::{epsilon_greedy_with, QTable};
use crate::dist::sample_probs;
use crate::envs::DiscreteEnv;
use crate::error::{invalid, Result};
use crate::mdp::Mdp;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelEntry {
    pub next: usize,
    pub reward: f64,
    pub terminal: bool,
}

/// The last observed outcome of every visited (state, action) pair.
#[derive(Debug, Clone)]
pub struct LearnedModel {
    num_actions: usize,
    entries: Vec<Option<ModelEntry>>,
    /// Visited pairs in first-visit order, for uniform sampling.
    visited: Vec<(usize, usize)>,
}

impl LearnedModel {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_actions,
            entries: vec![None; num_states * num_actions],
            visited: Vec::new(),
        }
    }

    pub fn record(&mut self, s: usize, a: usize, entry: ModelEntry) {
        let slot = &mut self.entries[s * self.num_actions + a];
        if slot.is_none() {
            self.visited.push((s, a));
        }
        *slot = Some(entry);
    }

    /// `None` for pairs never visited.
    pub fn get(&self, s: usize, a: usize) -> Option<ModelEntry> {
        self.entries[s * self.num_actions + a]
    }

    pub fn visited(&self) -> &[(usize, usize)] {
        &self.visited
    }

    pub fn is_visited(&self, s: usize, a: usize) -> bool {
        self.get(s, a).is_some()
    }

    pub fn sample_visited(&self, rng: &mut SeededRng) -> Option<(usize, usize)> {
        if self.visited.is_empty() {
            None
        } else {
            Some(self.visited[rng.random_range(0..self.visited.len())])
        }
    }
}

/// Where planning updates get their imagined outcomes.
#[derive(Debug, Clone)]
pub enum ModelSource {
    /// Replay the last real outcome of the pair.
    Learned,
    /// Sample from the true dynamics (pairs are still drawn from those visited).
    Exact(Mdp),
}

#[derive(Debug, Clone)]
pub struct DynaConfig {
    pub td: TdConfig,
    pub planning_steps: usize,
    pub model: ModelSource,
}

impl DynaConfig {
    pub fn new(td: TdConfig, planning_steps: usize) -> Self {
        Self {
            td,
            planning_steps,
            model: ModelSource::Learned,
        }
    }
}

pub fn dyna_q<E: DiscreteEnv>(env: &E, cfg: &DynaConfig, rng: &mut SeededRng) -> Result<QTable> {
    dyna_q_observed(env, cfg, rng, &mut NoObserver).map(|(q, _)| q)
}

/// Dyna-Q that also returns the learned model. With zero planning steps it
/// consumes the generator exactly like `q_learning`, so equal seeds give
/// identical Q trajectories.
pub fn dyna_q_observed<E: DiscreteEnv, O: Observer>(
    env: &E,
    cfg: &DynaConfig,
    rng: &mut SeededRng,
    observer: &mut O,
) -> Result<(QTable, LearnedModel)> {
    let td = &cfg.td;
    td.validate()?;
    if let ModelSource::Exact(mdp) = &cfg.model {
        if mdp.num_states() != env.num_states() || mdp.num_actions() != env.num_actions() {
            return invalid("exact model does not match the environment's shape");
        }
    }
    let mut q = QTable::new(env.num_states(), env.num_actions(), td.init);
    let mut model = LearnedModel::new(env.num_states(), env.num_actions());
    let mut total_steps = 0;
    for episode in 0..td.episodes {
        let epsilon = td.epsilon.at(episode, td.episodes);
        let mut current = env.reset(rng);
        let mut steps = 0;
        let mut episode_return = 0.0;
        while !current.terminal && steps < td.max_steps {
            let s = current.state;
            let a = epsilon_greedy_with(q.row(s), epsilon, td.ties, rng);
            let next = env.step(&s, a, rng)?;
            q_learning_update(&mut q, s, a, next.reward, next.state, next.terminal, td.alpha, td.gamma);
            model.record(
                s,
                a,
                ModelEntry {
                    next: next.state,
                    reward: next.reward,
                    terminal: next.terminal,
                },
            );
            steps += 1;
            total_steps += 1;
            episode_return += next.reward;
            observer.on_step(&StepRecord {
                episode,
                total_steps,
                state: s,
                action: a,
                reward: next.reward,
                next_state: next.state,
                terminal: next.terminal,
                q_value: q.get(s, a),
            });
            for _ in 0..cfg.planning_steps {
                plan_once(&mut q, &model, &cfg.model, td, env, rng);
            }
            current = next;
        }
        let stats = EpisodeStats {
            episode,
            steps,
            total_steps,
            episode_return,
            epsilon,
            terminal: current.terminal,
        };
        if !observer.on_episode(&stats, &q) {
            break;
        }
    }
    Ok((q, model))
}

fn plan_once<E: DiscreteEnv>(
    q: &mut QTable,
    model: &LearnedModel,
    source: &ModelSource,
    td: &TdConfig,
    env: &E,
    rng: &mut SeededRng,
) {
    let Some((s, a)) = model.sample_visited(rng) else {
        return;
    };
    let entry = match source {
        ModelSource::Learned => model.get(s, a).expect("sampled pairs are visited"),
        ModelSource::Exact(mdp) => {
            let outcomes = mdp.outcomes(s, a);
            let o = if outcomes.len() == 1 {
                outcomes[0]
            } else {
                let probs: Vec<f64> = outcomes.iter().map(|o| o.prob).collect();
                outcomes[sample_probs(&probs, rng)]
            };
            ModelEntry {
                next: o.next,
                reward: o.reward,
                terminal: env.is_terminal(&o.next),
            }
        }
    };
    q_learning_update(q, s, a, entry.reward, entry.next, entry.terminal, td.alpha, td.gamma);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Environment, GridWorld, Taxi};
    use crate::rng::seeded;
    use crate::tabular::{q_learning_observed, EpsilonSchedule};

    struct Trace(Vec<StepRecord>);

    impl Observer for Trace {
        fn on_step(&mut self, record: &StepRecord) {
            self.0.push(*record);
        }
    }

    fn small_td(episodes: usize) -> TdConfig {
        TdConfig {
            episodes,
            ..TdConfig::default()
        }
    }

    #[test]
    fn zero_planning_matches_q_learning_step_for_step() {
        let env = Taxi::new();
        let td = small_td(200);
        let mut a = Trace(Vec::new());
        let qa = q_learning_observed(&env, &td, &mut seeded(9), &mut a).unwrap();
        let mut b = Trace(Vec::new());
        let (qb, _) = dyna_q_observed(&env, &DynaConfig::new(td, 0), &mut seeded(9), &mut b).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(qa, qb);
    }

    #[test]
    fn learned_model_matches_deterministic_dynamics() {
        let env = Taxi::new();
        let (_, model) = dyna_q_observed(&env, &DynaConfig::new(small_td(50), 5), &mut seeded(2), &mut NoObserver).unwrap();
        assert!(!model.visited().is_empty());
        for &(s, a) in model.visited() {
            let e = model.get(s, a).unwrap();
            assert_eq!((e.next, e.reward, e.terminal), Taxi::transition(s, a));
        }
    }

    /// Records which pairs a planning update could have touched: any Q entry
    /// that changes without a real step must belong to a visited pair.
    #[test]
    fn planning_only_touches_visited_pairs() {
        let env = GridWorld::four_rooms();
        let td = TdConfig {
            episodes: 30,
            epsilon: EpsilonSchedule::constant(0.3),
            gamma: 0.9,
            ..TdConfig::default()
        };
        let (q, model) = dyna_q_observed(&env, &DynaConfig::new(td, 20), &mut seeded(5), &mut NoObserver).unwrap();
        for s in 0..env.num_states() {
            for a in 0..4 {
                if !model.is_visited(s, a) {
                    assert_eq!(q.get(s, a), 0.0);
                }
            }
        }
    }

    #[test]
    fn exact_model_source_plans_too() {
        let env = GridWorld::four_rooms();
        let mdp = env.exact_model().unwrap();
        let td = TdConfig {
            episodes: 20,
            gamma: 0.9,
            ..TdConfig::default()
        };
        let cfg = DynaConfig {
            td,
            planning_steps: 10,
            model: ModelSource::Exact(mdp),
        };
        let q = dyna_q(&env, &cfg, &mut seeded(1)).unwrap();
        assert!(q.values().iter().any(|v| *v > 0.0));
    }
}
