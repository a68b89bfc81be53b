//! Shared machinery for two-player, zero-sum, perfect-information board games.

use std::collections::{HashMap, HashSet};
use std::fmt::Debug;

use super::{check_legal, EnvState, Environment};
use crate::dist::Categorical;
use crate::error::{contract, Result};
use crate::mdp::{Mdp, MdpBuilder};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn other(self) -> Self {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    /// +1 for player one, -1 for player two.
    pub fn sign(self) -> f64 {
        match self {
            Player::One => 1.0,
            Player::Two => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Empty,
    Stone(Player),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoardState {
    pub cells: Vec<Cell>,
    pub to_move: Player,
}

impl BoardState {
    pub fn empty(size: usize) -> Self {
        Self {
            cells: vec![Cell::Empty; size],
            to_move: Player::One,
        }
    }

    pub fn count(&self, p: Player) -> usize {
        self.cells.iter().filter(|c| **c == Cell::Stone(p)).count()
    }

    /// Stone counts differ by 0 or 1 and agree with the side to move.
    pub fn is_consistent(&self) -> bool {
        let ones = self.count(Player::One);
        let twos = self.count(Player::Two);
        match self.to_move {
            Player::One => ones == twos,
            Player::Two => ones == twos + 1,
        }
    }

    pub fn empty_cells(&self) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|i| self.cells[*i] == Cell::Empty)
            .collect()
    }

    /// Ternary code: empty 0, player one 1, player two 2, first cell least significant.
    pub fn code(&self) -> u64 {
        self.cells.iter().rev().fold(0, |acc, c| {
            acc * 3
                + match c {
                    Cell::Empty => 0,
                    Cell::Stone(Player::One) => 1,
                    Cell::Stone(Player::Two) => 2,
                }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameResult {
    Win(Player),
    Draw,
}

impl GameResult {
    /// Score from `p`'s perspective: +1 win, 0 draw, -1 loss.
    pub fn score_for(self, p: Player) -> f64 {
        match self {
            GameResult::Win(w) if w == p => 1.0,
            GameResult::Win(_) => -1.0,
            GameResult::Draw => 0.0,
        }
    }
}

pub trait Game: Clone + Debug {
    fn name(&self) -> &'static str;

    /// Number of move ids; every legal move is below this.
    fn num_moves(&self) -> usize;

    fn initial(&self) -> BoardState;

    /// Result once the game is over, `None` while it continues.
    fn result(&self, state: &BoardState) -> Option<GameResult>;

    fn legal_moves(&self, state: &BoardState) -> Vec<usize> {
        if self.result(state).is_some() {
            Vec::new()
        } else {
            state.empty_cells()
        }
    }

    fn play(&self, state: &BoardState, mv: usize) -> Result<BoardState> {
        if self.result(state).is_some() {
            return contract("move played after the game ended");
        }
        if mv >= state.cells.len() || state.cells[mv] != Cell::Empty {
            return contract(format!("move {mv} is not a free cell"));
        }
        let mut next = state.clone();
        next.cells[mv] = Cell::Stone(state.to_move);
        next.to_move = state.to_move.other();
        Ok(next)
    }

    /// Two binary planes (mover's stones, then opponent's), flattened.
    fn encode(&self, state: &BoardState) -> Vec<f64> {
        let n = state.cells.len();
        let mut v = vec![0.0; 2 * n];
        for (i, c) in state.cells.iter().enumerate() {
            match c {
                Cell::Stone(p) if *p == state.to_move => v[i] = 1.0,
                Cell::Stone(_) => v[n + i] = 1.0,
                Cell::Empty => {}
            }
        }
        v
    }

    /// Index of move `mv` in the mover-relative frame used by `encode`;
    /// must be an involution for each side to move.
    fn canonical_move(&self, _state: &BoardState, mv: usize) -> usize {
        mv
    }

    fn render(&self, state: &BoardState) -> String;
}

/// A board game seen as an environment: both seats are driven through
/// `step`, rewards are +1/0/-1 at the end from player one's perspective.
#[derive(Debug, Clone)]
pub struct GameEnv<G> {
    pub game: G,
    /// Largest position graph `exact_model` will enumerate.
    pub max_model_states: usize,
}

impl<G: Game> GameEnv<G> {
    pub fn new(game: G) -> Self {
        Self {
            game,
            max_model_states: 200_000,
        }
    }
}

impl<G: Game> Environment for GameEnv<G> {
    type State = BoardState;

    fn num_actions(&self) -> usize {
        self.game.num_moves()
    }

    fn reset(&self, _rng: &mut SeededRng) -> EnvState<BoardState> {
        let state = self.game.initial();
        EnvState {
            legal_actions: self.game.legal_moves(&state),
            state,
            reward: 0.0,
            terminal: false,
            truncated: false,
        }
    }

    fn step(&self, state: &BoardState, action: usize, _rng: &mut SeededRng) -> Result<EnvState<BoardState>> {
        check_legal(&self.game.legal_moves(state), action)?;
        let next = self.game.play(state, action)?;
        let result = self.game.result(&next);
        Ok(EnvState {
            legal_actions: self.game.legal_moves(&next),
            reward: result.map_or(0.0, |r| r.score_for(Player::One)),
            terminal: result.is_some(),
            truncated: false,
            state: next,
        })
    }

    fn legal_actions(&self, state: &BoardState) -> Vec<usize> {
        self.game.legal_moves(state)
    }

    fn is_terminal(&self, state: &BoardState) -> bool {
        self.game.result(state).is_some()
    }

    fn exact_model(&self) -> Option<Mdp> {
        game_graph_model(&self.game, self.max_model_states).map(|(mdp, _)| mdp)
    }
}

/// The afterstate graph of a game as an episodic MDP (gamma = 1).
///
/// States are reachable positions numbered in breadth-first order from the
/// initial position (id 0). Every move id is an action; illegal moves
/// self-loop with reward 0. Entering a finished position pays its score
/// from player one's perspective. The MDP does not encode whose turn it is,
/// so solvers must alternate max and min by the returned positions'
/// `to_move`. Returns `None` when more than `max_states` positions exist.
pub fn game_graph_model<G: Game>(game: &G, max_states: usize) -> Option<(Mdp, Vec<BoardState>)> {
    let positions = enumerate_positions(game, max_states)?;
    let index: HashMap<&BoardState, usize> =
        positions.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let n = positions.len();
    let mut b = MdpBuilder::new(n, game.num_moves(), 1.0)
        .episodic(true)
        .initial(Categorical::one_hot(n, 0));
    for (s, pos) in positions.iter().enumerate() {
        if game.result(pos).is_some() {
            b.set_terminal(s);
            continue;
        }
        let legal = game.legal_moves(pos);
        for mv in 0..game.num_moves() {
            if legal.contains(&mv) {
                let next = game.play(pos, mv).ok()?;
                let reward = game.result(&next).map_or(0.0, |r| r.score_for(Player::One));
                b.set_deterministic(s, mv, index[&next], reward);
            } else {
                b.set_deterministic(s, mv, s, 0.0);
            }
        }
    }
    Some((b.build().ok()?, positions))
}

/// All positions reachable from the initial one, breadth-first.
pub fn enumerate_positions<G: Game>(game: &G, max_states: usize) -> Option<Vec<BoardState>> {
    let root = game.initial();
    let mut seen: HashSet<BoardState> = HashSet::from([root.clone()]);
    let mut order = vec![root];
    let mut head = 0;
    while head < order.len() {
        let pos = order[head].clone();
        head += 1;
        for mv in game.legal_moves(&pos) {
            let next = game.play(&pos, mv).ok()?;
            if !seen.contains(&next) {
                if order.len() >= max_states {
                    return None;
                }
                seen.insert(next.clone());
                order.push(next);
            }
        }
    }
    Some(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistency_rule() {
        let mut s = BoardState::empty(9);
        assert!(s.is_consistent());
        s.cells[0] = Cell::Stone(Player::One);
        assert!(!s.is_consistent());
        s.to_move = Player::Two;
        assert!(s.is_consistent());
    }

    #[test]
    fn result_scores() {
        assert_eq!(GameResult::Win(Player::One).score_for(Player::One), 1.0);
        assert_eq!(GameResult::Win(Player::One).score_for(Player::Two), -1.0);
        assert_eq!(GameResult::Draw.score_for(Player::Two), 0.0);
    }
}
