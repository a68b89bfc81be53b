//! First-order MAML: a regression task family learned by gradient steps,
//! and a bandit family learned by REINFORCE steps.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::dist::{sample_probs, softmax_vec};
use crate::envs::{Bandit, BanditNoise};
use crate::error::{invalid, Result};
use crate::io::CsvTable;
use crate::neural::{Gradient, Loss, Mlp};
use crate::rng::SeededRng;

/// Input and target pairs.
pub type Data = Vec<(Vec<f64>, Vec<f64>)>;

pub trait TaskFamily {
    type Task;

    fn sample_task(&self, rng: &mut SeededRng) -> Self::Task;

    fn sample_data(&self, task: &Self::Task, n: usize, rng: &mut SeededRng) -> Data;
}

/// Mean squared-error loss `mean 0.5 |f(x) - y|^2` and its gradient.
pub fn regression_loss(net: &Mlp, data: &Data) -> Result<(f64, Gradient)> {
    let batch: Vec<(&[f64], Loss)> = data.iter().map(|(x, y)| (x.as_slice(), Loss::Mse(y.clone()))).collect();
    net.batch_gradient(&batch)
}

/// `k` plain gradient steps of size `alpha` from `theta`, on a copy.
pub fn maml_inner_adapt(
    theta: &Mlp,
    loss: impl Fn(&Mlp) -> Result<(f64, Gradient)>,
    alpha: f64,
    k: usize,
) -> Result<Mlp> {
    let mut adapted = theta.clone();
    if alpha == 0.0 {
        return Ok(adapted);
    }
    for _ in 0..k {
        let (_, g) = loss(&adapted)?;
        adapted.sgd_update(&g, alpha)?;
    }
    Ok(adapted)
}

/// `y = a x + b` with `(a, b)` near one of several cluster centres and `x`
/// uniform on that cluster's own interval.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFamily {
    pub centers: Vec<(f64, f64)>,
    pub x_ranges: Vec<(f64, f64)>,
    /// Half-width of the uniform jitter around a centre.
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTask {
    pub slope: f64,
    pub intercept: f64,
    pub x_range: (f64, f64),
    pub cluster: usize,
}

impl Default for LinearFamily {
    fn default() -> Self {
        Self {
            centers: vec![(2.0, 1.0), (-1.0, 2.0), (-2.0, -1.0), (1.0, -2.0)],
            x_ranges: vec![(0.0, 1.0), (-3.0, 3.0), (-1.0, 0.0), (1.0, 2.0)],
            spread: 0.2,
        }
    }
}

impl LinearFamily {
    pub fn fixed(slope: f64, intercept: f64, x_range: (f64, f64)) -> Self {
        Self {
            centers: vec![(slope, intercept)],
            x_ranges: vec![x_range],
            spread: 0.0,
        }
    }
}

impl TaskFamily for LinearFamily {
    type Task = LinearTask;

    fn sample_task(&self, rng: &mut SeededRng) -> LinearTask {
        let cluster = rng.random_range(0..self.centers.len());
        let (a, b) = self.centers[cluster];
        let mut jitter = || {
            if self.spread > 0.0 {
                rng.random_range(-self.spread..self.spread)
            } else {
                0.0
            }
        };
        LinearTask {
            slope: a + jitter(),
            intercept: b + jitter(),
            x_range: self.x_ranges[cluster],
            cluster,
        }
    }

    fn sample_data(&self, task: &LinearTask, n: usize, rng: &mut SeededRng) -> Data {
        let (lo, hi) = task.x_range;
        (0..n)
            .map(|_| {
                let x = lo + (hi - lo) * rng.random::<f64>();
                (vec![x], vec![task.slope * x + task.intercept])
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MamlConfig {
    pub inner_lr: f64,
    pub outer_lr: f64,
    pub meta_batch: usize,
    pub iterations: usize,
    pub inner_steps: usize,
    pub support: usize,
    pub query: usize,
}

impl Default for MamlConfig {
    fn default() -> Self {
        Self {
            inner_lr: 0.25,
            outer_lr: 0.01,
            meta_batch: 8,
            iterations: 3000,
            inner_steps: 1,
            support: 10,
            query: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MamlRun {
    pub net: Mlp,
    /// Mean post-adaptation query loss per iteration.
    pub query_loss: Vec<f64>,
}

impl MamlRun {
    pub fn trace_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["iteration", "query_loss"]);
        for (i, l) in self.query_loss.iter().enumerate() {
            t.push([(i + 1).to_string(), format!("{l:.9e}")]);
        }
        t
    }
}

/// First-order MAML on a regression family. Each task draws a support set
/// for adaptation and a disjoint query set; the outer step applies the sum
/// over the meta-batch of query gradients taken at the adapted parameters.
/// With `inner_steps = 0` this is plain joint training.
pub fn maml_train<F: TaskFamily>(family: &F, init: &Mlp, cfg: &MamlConfig, rng: &mut SeededRng) -> Result<MamlRun> {
    if cfg.meta_batch == 0 || cfg.support == 0 || cfg.query == 0 {
        return invalid("meta-batch, support and query sizes must be positive");
    }
    let mut net = init.clone();
    let mut trace = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let mut outer = Gradient::zeros(net.num_params());
        let mut total = 0.0;
        for _ in 0..cfg.meta_batch {
            let task = family.sample_task(rng);
            let support = family.sample_data(&task, cfg.support, rng);
            let query = family.sample_data(&task, cfg.query, rng);
            let adapted = maml_inner_adapt(&net, |n| regression_loss(n, &support), cfg.inner_lr, cfg.inner_steps)?;
            let (l, g) = regression_loss(&adapted, &query)?;
            total += l;
            outer.add_scaled(&g, 1.0);
        }
        net.sgd_update(&outer, cfg.outer_lr)?;
        trace.push(total / cfg.meta_batch as f64);
    }
    Ok(MamlRun { net, query_loss: trace })
}

/// Mean query loss after adapting `net` on each of `tasks` fresh tasks.
pub fn post_adaptation_loss<F: TaskFamily>(
    family: &F,
    net: &Mlp,
    cfg: &MamlConfig,
    tasks: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..tasks {
        let task = family.sample_task(rng);
        let support = family.sample_data(&task, cfg.support, rng);
        let query = family.sample_data(&task, cfg.query, rng);
        let adapted = maml_inner_adapt(net, |n| regression_loss(n, &support), cfg.inner_lr, cfg.inner_steps)?;
        total += regression_loss(&adapted, &query)?.0;
    }
    Ok(total / tasks.max(1) as f64)
}

/// Bernoulli bandits whose arm means are a permutation of `payoffs`, drawn
/// uniformly from `permutations`.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditFamily {
    pub payoffs: Vec<f64>,
    pub permutations: Vec<Vec<usize>>,
}

impl Default for BanditFamily {
    /// Three arms paying 0.9, 0.5 and 0.1 on average; arm 2 is never the best.
    fn default() -> Self {
        Self {
            payoffs: vec![0.9, 0.5, 0.1],
            permutations: vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![2, 0, 1]],
        }
    }
}

impl BanditFamily {
    pub fn sample(&self, rng: &mut SeededRng) -> Bandit {
        let perm = self.permutations.choose(rng).expect("family has permutations");
        // perm[i] is the payoff index placed on arm i
        let means = perm.iter().map(|j| self.payoffs[*j]).collect();
        Bandit::new(means, BanditNoise::Bernoulli).expect("payoffs are probabilities")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditMamlConfig {
    pub inner_lr: f64,
    pub outer_lr: f64,
    pub meta_batch: usize,
    pub iterations: usize,
    pub inner_episodes: usize,
    pub query_episodes: usize,
}

impl Default for BanditMamlConfig {
    fn default() -> Self {
        Self {
            inner_lr: 5.0,
            outer_lr: 0.1,
            meta_batch: 8,
            iterations: 500,
            inner_episodes: 10,
            query_episodes: 20,
        }
    }
}

/// Mean of `r (e_a - p)` over `episodes` one-pull episodes under
/// `softmax(logits)`: the sampled gradient of expected reward.
fn reinforce_gradient(logits: &[f64], bandit: &Bandit, episodes: usize, rng: &mut SeededRng) -> Vec<f64> {
    let p = softmax_vec(logits);
    let mut g = vec![0.0; p.len()];
    let w = 1.0 / episodes as f64;
    for _ in 0..episodes {
        let a = sample_probs(&p, rng);
        let r = bandit.pull(a, rng);
        for (j, pj) in p.iter().enumerate() {
            g[j] -= w * r * pj;
        }
        g[a] += w * r;
    }
    g
}

/// One REINFORCE ascent step from `episodes` fresh episodes.
pub fn bandit_adapt(logits: &[f64], bandit: &Bandit, episodes: usize, lr: f64, rng: &mut SeededRng) -> Vec<f64> {
    if episodes == 0 {
        return logits.to_vec();
    }
    let g = reinforce_gradient(logits, bandit, episodes, rng);
    logits.iter().zip(g).map(|(l, g)| l + lr * g).collect()
}

/// Meta-learns initial logits with first-order MAML: adapt on inner
/// episodes, then ascend the query-episode gradient taken at the adapted
/// logits.
pub fn bandit_maml_train(family: &BanditFamily, cfg: &BanditMamlConfig, rng: &mut SeededRng) -> Result<Vec<f64>> {
    if cfg.meta_batch == 0 || cfg.query_episodes == 0 {
        return invalid("meta-batch and query episodes must be positive");
    }
    let mut logits = vec![0.0; family.payoffs.len()];
    for _ in 0..cfg.iterations {
        let mut outer = vec![0.0; logits.len()];
        for _ in 0..cfg.meta_batch {
            let bandit = family.sample(rng);
            let adapted = bandit_adapt(&logits, &bandit, cfg.inner_episodes, cfg.inner_lr, rng);
            for (o, g) in outer.iter_mut().zip(reinforce_gradient(&adapted, &bandit, cfg.query_episodes, rng)) {
                *o += g;
            }
        }
        for (l, g) in logits.iter_mut().zip(outer) {
            *l += cfg.outer_lr * g;
        }
    }
    Ok(logits)
}

/// Mean probability of the best arm after adapting `logits` on each of
/// `tasks` sampled bandits.
pub fn post_adaptation_best_prob(
    family: &BanditFamily,
    logits: &[f64],
    cfg: &BanditMamlConfig,
    tasks: usize,
    rng: &mut SeededRng,
) -> f64 {
    let mut total = 0.0;
    for _ in 0..tasks {
        let bandit = family.sample(rng);
        let adapted = bandit_adapt(logits, &bandit, cfg.inner_episodes, cfg.inner_lr, rng);
        total += softmax_vec(&adapted)[bandit.best_arm()];
    }
    total / tasks.max(1) as f64
}
