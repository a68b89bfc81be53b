//! Population-based training with barrier-synchronized segments.
//!
//! Every member trains one segment, is evaluated, and then, if ready and
//! ranked in the bottom fraction, copies weights and hyperparameters from a
//! uniformly chosen member of the top fraction and perturbs the copy.

use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::envs::DiscreteEnv;
use crate::error::{invalid, Result};
use crate::io::CsvTable;
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::tabular::{evaluate_greedy, QLearner};

#[derive(Debug, Clone, PartialEq)]
pub struct PbtMember<W> {
    pub id: usize,
    pub weights: W,
    pub hyper: Vec<f64>,
    /// Evaluation after the latest segment (or copied with the weights).
    pub score: f64,
    pub steps: usize,
    rng: SeededRng,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PbtEvent {
    Train,
    ExploitFrom(usize),
    /// Per-hyperparameter multipliers.
    Explore(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineageEvent {
    pub step: usize,
    pub member: usize,
    pub event: PbtEvent,
    /// Hyperparameters after the event.
    pub hyper: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbtConfig {
    pub segment_steps: usize,
    pub total_steps: usize,
    pub exploit_fraction: f64,
    pub perturb: [f64; 2],
}

impl Default for PbtConfig {
    fn default() -> Self {
        Self {
            segment_steps: 5_000,
            total_steps: 100_000,
            exploit_fraction: 0.25,
            perturb: [0.8, 1.25],
        }
    }
}

#[derive(Debug, Clone)]
pub struct PbtRun<W> {
    pub members: Vec<PbtMember<W>>,
    /// Index of the best-scoring member at the end.
    pub best: usize,
    pub lineage: Vec<LineageEvent>,
}

impl<W> PbtRun<W> {
    pub fn best_member(&self) -> &PbtMember<W> {
        &self.members[self.best]
    }

    pub fn lineage_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["step", "member_id", "event", "h", "score"]);
        for e in &self.lineage {
            let event = match &e.event {
                PbtEvent::Train => "train".to_string(),
                PbtEvent::ExploitFrom(d) => format!("exploit_from:{d}"),
                PbtEvent::Explore(_) => "explore".to_string(),
            };
            let h: Vec<String> = e.hyper.iter().map(|v| format!("{v:e}")).collect();
            t.push([e.step.to_string(), e.member.to_string(), event, h.join(";"), format!("{:.9}", e.score)]);
        }
        t
    }

    pub fn save_lineage(&self, path: impl AsRef<Path>) -> Result<()> {
        self.lineage_csv().save(path)
    }
}

/// Seed of member `id`'s private generator given the run's base draw.
pub fn member_seed(base: u64, id: usize) -> u64 {
    derive_seed(base, id as u64)
}

/// Runs PBT from `initial` (weights, hyperparameters) pairs.
///
/// `train(weights, hyper, steps, rng)` advances one member; `eval(weights,
/// hyper)` scores it, higher is better.
pub fn pbt_train<W: Clone>(
    initial: Vec<(W, Vec<f64>)>,
    mut train: impl FnMut(&mut W, &[f64], usize, &mut SeededRng) -> Result<()>,
    mut eval: impl FnMut(&W, &[f64]) -> Result<f64>,
    mut ready: impl FnMut(&PbtMember<W>) -> bool,
    cfg: &PbtConfig,
    rng: &mut SeededRng,
) -> Result<PbtRun<W>> {
    if initial.is_empty() {
        return invalid("empty population");
    }
    if cfg.segment_steps == 0 || cfg.total_steps == 0 {
        return invalid("segment and total steps must be positive");
    }
    if !(0.0..=0.5).contains(&cfg.exploit_fraction) {
        return invalid("exploit fraction must lie in [0, 0.5]");
    }
    let base = rng.random::<u64>();
    let mut members: Vec<PbtMember<W>> = initial
        .into_iter()
        .enumerate()
        .map(|(id, (weights, hyper))| PbtMember {
            id,
            weights,
            hyper,
            score: f64::NEG_INFINITY,
            steps: 0,
            rng: seeded(member_seed(base, id)),
        })
        .collect();
    let n = members.len();
    let k = ((n as f64 * cfg.exploit_fraction).ceil() as usize).min(n / 2);
    let mut lineage = Vec::new();
    let mut step = 0;
    while step < cfg.total_steps {
        let seg = cfg.segment_steps.min(cfg.total_steps - step);
        step += seg;
        for m in members.iter_mut() {
            train(&mut m.weights, &m.hyper, seg, &mut m.rng)?;
            m.steps += seg;
            m.score = eval(&m.weights, &m.hyper)?;
            lineage.push(LineageEvent {
                step,
                member: m.id,
                event: PbtEvent::Train,
                hyper: m.hyper.clone(),
                score: m.score,
            });
        }
        if step >= cfg.total_steps || k == 0 {
            continue;
        }
        // shuffled first so equal scores rank in random order
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        order.sort_by(|a, b| members[*b].score.total_cmp(&members[*a].score));
        let top: Vec<usize> = order[..k].to_vec();
        for &m in &order[n - k..] {
            if !ready(&members[m]) {
                continue;
            }
            let donor = *top.choose(rng).expect("k > 0");
            let (weights, hyper, score) = {
                let d = &members[donor];
                (d.weights.clone(), d.hyper.clone(), d.score)
            };
            let member = &mut members[m];
            member.weights = weights;
            member.hyper = hyper;
            member.score = score;
            lineage.push(LineageEvent {
                step,
                member: m,
                event: PbtEvent::ExploitFrom(donor),
                hyper: member.hyper.clone(),
                score,
            });
            let factors: Vec<f64> = member.hyper.iter().map(|_| cfg.perturb[rng.random_range(0..2)]).collect();
            for (h, f) in member.hyper.iter_mut().zip(&factors) {
                *h *= f;
            }
            lineage.push(LineageEvent {
                step,
                member: m,
                event: PbtEvent::Explore(factors),
                hyper: member.hyper.clone(),
                score,
            });
        }
    }
    let best = (0..n)
        .max_by(|a, b| members[*a].score.total_cmp(&members[*b].score).then(b.cmp(a)))
        .expect("non-empty");
    Ok(PbtRun { members, best, lineage })
}

/// Re-derives every member's final hyperparameters from the initial ones
/// and the copy and perturbation events of a lineage log.
pub fn replay_lineage(initial: &[Vec<f64>], lineage: &[LineageEvent]) -> Vec<Vec<f64>> {
    let mut h = initial.to_vec();
    for e in lineage {
        match &e.event {
            PbtEvent::Train => {}
            PbtEvent::ExploitFrom(d) => h[e.member] = h[*d].clone(),
            PbtEvent::Explore(factors) => {
                for (v, f) in h[e.member].iter_mut().zip(factors) {
                    *v *= f;
                }
            }
        }
    }
    h
}

/// Q-learning with a tuned step size. Hyperparameter 0 is alpha.
#[derive(Debug, Clone)]
pub struct TabularSetup<'a, E> {
    pub env: &'a E,
    pub gamma: f64,
    pub epsilon: f64,
    pub max_episode_steps: usize,
    /// Greedy evaluation starts from each of these.
    pub eval_starts: Vec<usize>,
    pub eval_max_steps: usize,
}

impl<E: DiscreteEnv> TabularSetup<'_, E> {
    pub fn fresh(&self) -> QLearner {
        QLearner::new(self.env.num_states(), self.env.num_actions())
    }

    pub fn train(&self, learner: &mut QLearner, alpha: f64, steps: usize, rng: &mut SeededRng) -> Result<()> {
        learner.train_steps(self.env, alpha, self.gamma, self.epsilon, steps, self.max_episode_steps, rng)
    }

    /// Mean greedy return; the environments used here are deterministic,
    /// so the generator is never consulted.
    pub fn evaluate(&self, learner: &QLearner) -> Result<f64> {
        evaluate_greedy(self.env, &learner.q, &self.eval_starts, self.eval_max_steps, &mut seeded(0))
    }

    /// PBT over alpha, one member per initial value.
    pub fn pbt(&self, alphas: &[f64], cfg: &PbtConfig, rng: &mut SeededRng) -> Result<PbtRun<QLearner>> {
        let initial = alphas.iter().map(|a| (self.fresh(), vec![*a])).collect();
        pbt_train(
            initial,
            |w, h, steps, rng| self.train(w, h[0].min(1.0), steps, rng),
            |w, _| self.evaluate(w),
            |_| true,
            cfg,
            rng,
        )
    }

    /// Independent runs at fixed alphas with `steps` each; run `i` uses
    /// seed `derive_seed(seed, i)`. Returns the final evaluations.
    pub fn grid(&self, alphas: &[f64], steps: usize, seed: u64) -> Result<Vec<f64>> {
        alphas
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut learner = self.fresh();
                self.train(&mut learner, *a, steps, &mut seeded(derive_seed(seed, i as u64)))?;
                self.evaluate(&learner)
            })
            .collect()
    }
}

/// `count` values spaced evenly in log scale over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
