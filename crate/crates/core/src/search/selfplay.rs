//! Self-play training: games with net-guided search produce examples, the
//! net is fit to the search's visit distributions and the game outcomes.

use std::collections::VecDeque;
use std::path::Path;

use rand::Rng;

use super::arena::{play_match, MatchResult, MctsAgent, RandomAgent};
use super::mcts::{Dirichlet, Leaf, MctsConfig, Selection, Tree};
use super::net::DualHeadNet;
use crate::dist::sample_probs;
use crate::envs::{Game, GameResult, Player};
use crate::error::{invalid, Result};
use crate::io::CsvTable;
use crate::rng::{derive_seed, seeded, SeededRng};

/// One training example from a self-play position.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleTriple {
    pub input: Vec<f64>,
    /// Normalized root visit counts, in the same mover-relative frame as
    /// `input`.
    pub policy: Vec<f64>,
    /// Final result for the side to move: +1, 0 or -1.
    pub outcome: f64,
    pub mover: Player,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfPlayConfig {
    pub iterations: usize,
    pub games_per_iteration: usize,
    pub simulations: usize,
    pub c_p: f64,
    pub root_noise: Option<Dirichlet>,
    /// Plies played by sampling from the visit counts; later moves are argmax.
    pub sampled_plies: usize,
    /// Iterations of examples kept for training.
    pub window: usize,
    pub train_steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Games against a uniformly random player after each iteration; 0 skips.
    pub eval_games: usize,
}

impl Default for SelfPlayConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            games_per_iteration: 100,
            simulations: 100,
            c_p: 2.5,
            root_noise: Some(Dirichlet::default()),
            sampled_plies: 4,
            window: 20,
            train_steps: 500,
            batch_size: 32,
            lr: 0.05,
            eval_games: 0,
        }
    }
}

impl SelfPlayConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0
            || self.games_per_iteration == 0
            || self.simulations == 0
            || self.window == 0
            || self.batch_size == 0
        {
            return invalid("self-play counts must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.c_p >= 0.0) {
            return invalid("learning rate must be positive and c_p non-negative");
        }
        if self.eval_games % 2 != 0 {
            return invalid("evaluation games must be even");
        }
        Ok(())
    }

    pub fn search(&self) -> MctsConfig {
        MctsConfig {
            simulations: self.simulations,
            selection: Selection::Puct { c_p: self.c_p },
            root_noise: self.root_noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub examples: usize,
    pub buffer: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub first_player_wins: usize,
    pub second_player_wins: usize,
    pub draws: usize,
    pub vs_random: Option<MatchResult>,
}

#[derive(Debug, Clone)]
pub struct SelfPlayRun {
    pub net: DualHeadNet,
    /// The net before training, then after each iteration.
    pub snapshots: Vec<DualHeadNet>,
    pub metrics: Vec<IterationMetrics>,
}

impl SelfPlayRun {
    pub fn metrics_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "iteration",
            "examples",
            "buffer",
            "policy_loss",
            "value_loss",
            "first_player_wins",
            "second_player_wins",
            "draws",
            "random_wins",
            "random_draws",
            "random_losses",
        ]);
        for m in &self.metrics {
            let r = m.vs_random.map(|r| r.total());
            let cell = |f: fn(&crate::search::Tally) -> usize| r.as_ref().map_or(String::new(), |t| f(t).to_string());
            t.push([
                m.iteration.to_string(),
                m.examples.to_string(),
                m.buffer.to_string(),
                format!("{:.6}", m.policy_loss),
                format!("{:.6}", m.value_loss),
                m.first_player_wins.to_string(),
                m.second_player_wins.to_string(),
                m.draws.to_string(),
                cell(|t| t.wins),
                cell(|t| t.draws),
                cell(|t| t.losses),
            ]);
        }
        t
    }

    pub fn save_metrics(&self, path: impl AsRef<Path>) -> Result<()> {
        self.metrics_csv().save(path)
    }
}

/// One self-play game; every example carries the final result from its
/// own mover's perspective.
pub fn self_play_game<G: Game>(
    game: &G,
    net: &DualHeadNet,
    cfg: &SelfPlayConfig,
    rng: &mut SeededRng,
) -> Result<(Vec<ExampleTriple>, GameResult)> {
    let search = cfg.search();
    let mut state = game.initial();
    let mut examples = Vec::new();
    let mut ply = 0;
    let result = loop {
        if let Some(r) = game.result(&state) {
            break r;
        }
        let mut tree = Tree::new(game, &state, search.selection, Leaf::Net(net), rng)?;
        if let Some(noise) = search.root_noise {
            tree.add_root_noise(noise, rng)?;
        }
        tree.simulate(search.simulations, rng)?;
        let found = tree.result();
        let mv = if ply < cfg.sampled_plies {
            sample_probs(&found.policy, rng)
        } else {
            found.action
        };
        let mut policy = vec![0.0; found.policy.len()];
        for (mv, p) in found.policy.iter().enumerate() {
            policy[game.canonical_move(&state, mv)] = *p;
        }
        examples.push(ExampleTriple {
            input: game.encode(&state),
            policy,
            outcome: 0.0,
            mover: state.to_move,
        });
        state = game.play(&state, mv)?;
        ply += 1;
    };
    for ex in &mut examples {
        ex.outcome = result.score_for(ex.mover);
    }
    Ok((examples, result))
}

/// Alternates self-play and training for `cfg.iterations` rounds.
///
/// Game `g` of iteration `i` uses its own generator derived from one draw
/// of `rng`, so the run depends only on the seed.
pub fn self_play_train<G: Game>(
    game: &G,
    net: DualHeadNet,
    cfg: &SelfPlayConfig,
    rng: &mut SeededRng,
) -> Result<SelfPlayRun> {
    cfg.validate()?;
    if net.num_moves() != game.num_moves() {
        return invalid(format!(
            "policy head has {} outputs for {} moves",
            net.num_moves(),
            game.num_moves()
        ));
    }
    let base = rng.random::<u64>();
    let mut net = net;
    let mut snapshots = vec![net.clone()];
    let mut window: VecDeque<Vec<ExampleTriple>> = VecDeque::new();
    let mut metrics = Vec::new();
    for it in 1..=cfg.iterations {
        let mut fresh = Vec::new();
        let (mut first, mut second, mut draws) = (0, 0, 0);
        for g in 0..cfg.games_per_iteration {
            let mut game_rng = seeded(derive_seed(base, (it * cfg.games_per_iteration + g) as u64));
            let (examples, result) = self_play_game(game, &net, cfg, &mut game_rng)?;
            match result {
                GameResult::Win(Player::One) => first += 1,
                GameResult::Win(Player::Two) => second += 1,
                GameResult::Draw => draws += 1,
            }
            fresh.extend(examples);
        }
        let examples = fresh.len();
        window.push_back(fresh);
        while window.len() > cfg.window {
            window.pop_front();
        }
        let buffer: Vec<&ExampleTriple> = window.iter().flatten().collect();
        let mut train_rng = seeded(derive_seed(base, u64::MAX - it as u64));
        let (mut pl, mut vl) = (0.0, 0.0);
        let k = 1.0 / cfg.batch_size as f64;
        for _ in 0..cfg.train_steps {
            let mut grad = net.zero_gradient();
            let (mut bp, mut bv) = (0.0, 0.0);
            for _ in 0..cfg.batch_size {
                let ex = buffer[train_rng.random_range(0..buffer.len())];
                let (p, v) = net.accumulate(&ex.input, &ex.policy, ex.outcome, k, &mut grad)?;
                bp += p * k;
                bv += v * k;
            }
            net.sgd_update(&grad, cfg.lr)?;
            pl = bp;
            vl = bv;
        }
        let vs_random = if cfg.eval_games > 0 {
            let mut agent = MctsAgent::with_net("net", MctsConfig::new(cfg.simulations, Selection::Puct { c_p: cfg.c_p }), net.clone());
            let mut eval_rng = seeded(derive_seed(base ^ 0x5eed, it as u64));
            Some(play_match(game, &mut agent, &mut RandomAgent, cfg.eval_games, 0, &mut eval_rng)?)
        } else {
            None
        };
        metrics.push(IterationMetrics {
            iteration: it,
            examples,
            buffer: buffer.len(),
            policy_loss: pl,
            value_loss: vl,
            first_player_wins: first,
            second_player_wins: second,
            draws,
            vs_random,
        });
        snapshots.push(net.clone());
    }
    Ok(SelfPlayRun {
        net,
        snapshots,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::TicTacToe;

    fn small() -> SelfPlayConfig {
        SelfPlayConfig {
            iterations: 2,
            games_per_iteration: 4,
            simulations: 16,
            train_steps: 10,
            ..SelfPlayConfig::default()
        }
    }

    #[test]
    fn outcomes_follow_one_result_with_alternating_sign() {
        let g = TicTacToe;
        let mut rng = seeded(0);
        let net = DualHeadNet::for_game(&g, &[16], &mut rng).unwrap();
        for seed in 0..5 {
            let (examples, result) = self_play_game(&g, &net, &small(), &mut seeded(seed)).unwrap();
            for (i, ex) in examples.iter().enumerate() {
                let mover = if i % 2 == 0 { Player::One } else { Player::Two };
                assert_eq!(ex.mover, mover);
                assert_eq!(ex.outcome, result.score_for(mover));
                assert!((ex.policy.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                // visit targets only cover empty cells
                for (mv, p) in ex.policy.iter().enumerate() {
                    if *p > 0.0 {
                        assert_eq!(ex.input[mv] + ex.input[9 + mv], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn training_is_reproducible() {
        let g = TicTacToe;
        let run = |seed| {
            let mut rng = seeded(seed);
            let net = DualHeadNet::for_game(&g, &[16], &mut rng).unwrap();
            self_play_train(&g, net, &small(), &mut rng).unwrap()
        };
        let a = run(3);
        let b = run(3);
        assert_eq!(a.net, b.net);
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.snapshots.len(), 3);
        assert_ne!(a.snapshots[0], a.net);
        assert_eq!(a.metrics_csv().len(), 2);
    }

    #[test]
    fn mismatched_heads_are_rejected() {
        let mut rng = seeded(1);
        let net = DualHeadNet::new(18, &[4], 7, &mut rng).unwrap();
        assert!(self_play_train(&TicTacToe, net, &small(), &mut rng).is_err());
    }
}
