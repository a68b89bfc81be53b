//! Agents and head-to-head matches.

use rand::seq::IndexedRandom;

use super::mcts::{mcts_search, Leaf, MctsConfig};
use super::minimax::MinimaxSolver;
use super::net::DualHeadNet;
use crate::envs::{BoardState, Game, GameResult, Player};
use crate::error::{invalid, Result};
use crate::io::CsvTable;
use crate::rng::SeededRng;

pub trait Agent<G: Game> {
    fn name(&self) -> String;
    fn choose(&mut self, game: &G, state: &BoardState, rng: &mut SeededRng) -> Result<usize>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomAgent;

impl<G: Game> Agent<G> for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn choose(&mut self, game: &G, state: &BoardState, rng: &mut SeededRng) -> Result<usize> {
        Ok(*game.legal_moves(state).choose(rng).expect("unfinished games have moves"))
    }
}

/// Perfect play by full-depth minimax; the lowest optimal move id.
#[derive(Debug, Clone)]
pub struct MinimaxAgent<G> {
    solver: MinimaxSolver<G>,
}

impl<G: Game> MinimaxAgent<G> {
    pub fn new(game: G) -> Self {
        Self {
            solver: MinimaxSolver::new(game),
        }
    }
}

impl<G: Game> Agent<G> for MinimaxAgent<G> {
    fn name(&self) -> String {
        "minimax".into()
    }

    fn choose(&mut self, _game: &G, state: &BoardState, _rng: &mut SeededRng) -> Result<usize> {
        Ok(self.solver.optimal_moves(state)[0])
    }
}

/// Tree search that plays its most visited root move. Evaluation agents
/// never add root noise.
#[derive(Debug, Clone)]
pub struct MctsAgent {
    pub label: String,
    pub config: MctsConfig,
    pub net: Option<DualHeadNet>,
}

impl MctsAgent {
    pub fn playouts(label: impl Into<String>, config: MctsConfig) -> Self {
        Self {
            label: label.into(),
            config: MctsConfig {
                root_noise: None,
                ..config
            },
            net: None,
        }
    }

    pub fn with_net(label: impl Into<String>, config: MctsConfig, net: DualHeadNet) -> Self {
        Self {
            net: Some(net),
            ..Self::playouts(label, config)
        }
    }
}

impl<G: Game> Agent<G> for MctsAgent {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn choose(&mut self, game: &G, state: &BoardState, rng: &mut SeededRng) -> Result<usize> {
        let leaf = self.net.as_ref().map_or(Leaf::RandomPlayout, Leaf::Net);
        Ok(mcts_search(game, state, &self.config, leaf, rng)?.action)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
}

impl Tally {
    pub fn games(&self) -> usize {
        self.wins + self.draws + self.losses
    }

    /// Wins plus half the draws.
    pub fn points(&self) -> f64 {
        self.wins as f64 + 0.5 * self.draws as f64
    }

    fn record(&mut self, score: f64) {
        if score > 0.0 {
            self.wins += 1;
        } else if score < 0.0 {
            self.losses += 1;
        } else {
            self.draws += 1;
        }
    }

    fn add(&self, other: &Tally) -> Tally {
        Tally {
            wins: self.wins + other.wins,
            draws: self.draws + other.draws,
            losses: self.losses + other.losses,
        }
    }
}

/// Results from the first agent's perspective, split by its seat.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchResult {
    pub moving_first: Tally,
    pub moving_second: Tally,
}

impl MatchResult {
    pub fn total(&self) -> Tally {
        self.moving_first.add(&self.moving_second)
    }

    /// Points per game for the first agent.
    pub fn score_rate(&self) -> f64 {
        let t = self.total();
        t.points() / t.games().max(1) as f64
    }

    pub fn csv_header() -> CsvTable {
        CsvTable::new(&["iteration", "opponent", "wins", "draws", "losses", "colors"])
    }

    /// Appends one row per seat.
    pub fn append_rows(&self, table: &mut CsvTable, iteration: usize, opponent: &str) {
        for (colors, t) in [("first", self.moving_first), ("second", self.moving_second)] {
            table.push([
                iteration.to_string(),
                opponent.to_string(),
                t.wins.to_string(),
                t.draws.to_string(),
                t.losses.to_string(),
                colors.to_string(),
            ]);
        }
    }
}

/// Plays `games` games (even) in pairs: each pair starts from the same
/// `opening_plies` uniformly random moves, with the agents swapping seats.
pub fn play_match<G: Game>(
    game: &G,
    a: &mut dyn Agent<G>,
    b: &mut dyn Agent<G>,
    games: usize,
    opening_plies: usize,
    rng: &mut SeededRng,
) -> Result<MatchResult> {
    if games == 0 || games % 2 != 0 {
        return invalid(format!("a match needs a positive even number of games, got {games}"));
    }
    let mut result = MatchResult::default();
    for _ in 0..games / 2 {
        let opening = random_opening(game, opening_plies, rng)?;
        for a_first in [true, false] {
            let mut s = opening.clone();
            let a_seat = if a_first { Player::One } else { Player::Two };
            let outcome = loop {
                if let Some(r) = game.result(&s) {
                    break r;
                }
                let mv = if s.to_move == a_seat {
                    a.choose(game, &s, rng)?
                } else {
                    b.choose(game, &s, rng)?
                };
                s = game.play(&s, mv)?;
            };
            let tally = if a_first {
                &mut result.moving_first
            } else {
                &mut result.moving_second
            };
            tally.record(GameResult::score_for(outcome, a_seat));
        }
    }
    Ok(result)
}

/// A position after `plies` random moves that has not already ended.
fn random_opening<G: Game>(game: &G, plies: usize, rng: &mut SeededRng) -> Result<BoardState> {
    for _ in 0..1000 {
        let mut s = game.initial();
        for _ in 0..plies {
            if game.result(&s).is_some() {
                break;
            }
            let mv = *game.legal_moves(&s).choose(rng).expect("unfinished games have moves");
            s = game.play(&s, mv)?;
        }
        if game.result(&s).is_none() {
            return Ok(s);
        }
    }
    invalid(format!("no unfinished opening of {plies} plies found"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::TicTacToe;
    use crate::rng::seeded;
    use crate::search::Selection;

    #[test]
    fn perfect_play_always_draws() {
        let g = TicTacToe;
        let mut a = MinimaxAgent::new(g);
        let mut b = MinimaxAgent::new(g);
        let r = play_match(&g, &mut a, &mut b, 20, 0, &mut seeded(0)).unwrap();
        assert_eq!(r.total().draws, 20);
    }

    #[test]
    fn identical_deterministic_agents_mirror() {
        let g = TicTacToe;
        let cfg = MctsConfig::new(1, Selection::uct());
        // one simulation visits the lowest move id, so both agents play
        // identical fixed lines
        let mut a = MctsAgent::playouts("a", cfg);
        let mut b = MctsAgent::playouts("b", cfg);
        let r = play_match(&g, &mut a, &mut b, 10, 0, &mut seeded(1)).unwrap();
        assert_eq!(r.moving_first.wins, r.moving_second.losses);
        assert_eq!(r.moving_first.losses, r.moving_second.wins);
        assert_eq!(r.moving_first.draws, r.moving_second.draws);
    }

    #[test]
    fn tallies_sum_to_games_and_odd_counts_fail() {
        let g = TicTacToe;
        let r = play_match(&g, &mut RandomAgent, &mut RandomAgent, 30, 2, &mut seeded(2)).unwrap();
        assert_eq!(r.total().games(), 30);
        assert_eq!(r.moving_first.games(), 15);
        assert!(play_match(&g, &mut RandomAgent, &mut RandomAgent, 3, 0, &mut seeded(2)).is_err());
    }

    #[test]
    fn minimax_never_loses_to_random() {
        let g = TicTacToe;
        let mut perfect = MinimaxAgent::new(g);
        let r = play_match(&g, &mut perfect, &mut RandomAgent, 100, 0, &mut seeded(3)).unwrap();
        assert_eq!(r.total().losses, 0);
        let mut table = MatchResult::csv_header();
        r.append_rows(&mut table, 0, "random");
        assert_eq!(table.len(), 2);
    }
}
