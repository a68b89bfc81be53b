//! Grid worlds loaded from character maps.
//!
//! Map characters: `.` floor, `#` wall, `S` start, `G` goal, `X` un-goal
//! (a terminal with negative reward), `H` hallway (floor joining two rooms).
//! Only non-wall cells get state ids, numbered in row-major order.
//! Actions: 0 up, 1 right, 2 down, 3 left; bumping into a wall stays put.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use rand::Rng;

use super::{check_legal, DiscreteEnv, EnvState, Environment};
use crate::dist::Categorical;
use crate::error::{invalid, Result, RlError};
use crate::mdp::{Mdp, MdpBuilder};
use crate::rng::SeededRng;

pub const UP: usize = 0;
pub const RIGHT: usize = 1;
pub const DOWN: usize = 2;
pub const LEFT: usize = 3;
pub const NUM_ACTIONS: usize = 4;

/// The classic four-rooms layout: an 11x11 interior inside a wall border.
pub const FOUR_ROOMS: &str = "\
#############
#.....#.....#
#.....#.....#
#.....H.....#
#.....#.....#
#.....#.....#
##H####.....#
#.....###H###
#.....#.....#
#.....#..G..#
#.....H.....#
#.....#.....#
#############
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tile {
    Floor,
    Wall,
    Start,
    Goal,
    UnGoal,
    Hallway,
}

impl Tile {
    fn from_char(c: char) -> Option<Self> {
        Some(match c {
            '.' => Tile::Floor,
            '#' => Tile::Wall,
            'S' => Tile::Start,
            'G' => Tile::Goal,
            'X' => Tile::UnGoal,
            'H' => Tile::Hallway,
            _ => return None,
        })
    }

    fn to_char(self) -> char {
        match self {
            Tile::Floor => '.',
            Tile::Wall => '#',
            Tile::Start => 'S',
            Tile::Goal => 'G',
            Tile::UnGoal => 'X',
            Tile::Hallway => 'H',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRewards {
    pub step: f64,
    pub goal: f64,
    pub ungoal: f64,
}

impl Default for GridRewards {
    fn default() -> Self {
        Self {
            step: 0.0,
            goal: 1.0,
            ungoal: -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    rows: usize,
    cols: usize,
    tiles: Vec<Tile>,
    /// Map cell index -> state id, `None` for walls.
    cell_state: Vec<Option<usize>>,
    /// State id -> map cell index.
    state_cell: Vec<usize>,
    starts: Vec<usize>,
    pub rewards: GridRewards,
    pub gamma: f64,
}

impl GridWorld {
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        if lines.is_empty() {
            return invalid("empty grid map");
        }
        let cols = lines[0].chars().count();
        let mut tiles = Vec::with_capacity(lines.len() * cols);
        for (r, line) in lines.iter().enumerate() {
            if line.chars().count() != cols {
                return Err(RlError::Parse(format!(
                    "row {r} has {} cells, expected {cols}",
                    line.chars().count()
                )));
            }
            for (c, ch) in line.chars().enumerate() {
                let tile = Tile::from_char(ch).ok_or_else(|| {
                    RlError::Parse(format!("unknown map character {ch:?} at row {r}, col {c}"))
                })?;
                tiles.push(tile);
            }
        }
        let rows = lines.len();
        let mut cell_state = vec![None; tiles.len()];
        let mut state_cell = Vec::new();
        for (i, t) in tiles.iter().enumerate() {
            if *t != Tile::Wall {
                cell_state[i] = Some(state_cell.len());
                state_cell.push(i);
            }
        }
        if state_cell.is_empty() {
            return invalid("grid map has no free cells");
        }
        let explicit: Vec<usize> = state_cell
            .iter()
            .enumerate()
            .filter(|(_, cell)| tiles[**cell] == Tile::Start)
            .map(|(s, _)| s)
            .collect();
        let starts = if explicit.is_empty() {
            state_cell
                .iter()
                .enumerate()
                .filter(|(_, cell)| !matches!(tiles[**cell], Tile::Goal | Tile::UnGoal))
                .map(|(s, _)| s)
                .collect()
        } else {
            explicit
        };
        if starts.is_empty() {
            return invalid("grid map has no start cells");
        }
        Ok(Self {
            rows,
            cols,
            tiles,
            cell_state,
            state_cell,
            starts,
            rewards: GridRewards::default(),
            gamma: 0.9,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn four_rooms() -> Self {
        Self::parse(FOUR_ROOMS).expect("built-in map parses")
    }

    pub fn with_rewards(mut self, rewards: GridRewards) -> Self {
        self.rewards = rewards;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn start_states(&self) -> &[usize] {
        &self.starts
    }

    pub fn position(&self, state: usize) -> (usize, usize) {
        let cell = self.state_cell[state];
        (cell / self.cols, cell % self.cols)
    }

    pub fn state_at(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.rows || col >= self.cols {
            return None;
        }
        self.cell_state[row * self.cols + col]
    }

    pub fn tile(&self, state: usize) -> Tile {
        self.tiles[self.state_cell[state]]
    }

    pub fn states_with(&self, tile: Tile) -> Vec<usize> {
        (0..self.state_cell.len())
            .filter(|s| self.tile(*s) == tile)
            .collect()
    }

    /// Deterministic move: `(next state, reward, terminal)`.
    pub fn transition(&self, state: usize, action: usize) -> (usize, f64, bool) {
        let (r, c) = self.position(state);
        let target = match action {
            UP if r > 0 => self.state_at(r - 1, c),
            RIGHT => self.state_at(r, c + 1),
            DOWN => self.state_at(r + 1, c),
            LEFT if c > 0 => self.state_at(r, c - 1),
            _ => None,
        };
        let next = target.unwrap_or(state);
        match self.tile(next) {
            Tile::Goal => (next, self.rewards.step + self.rewards.goal, true),
            Tile::UnGoal => (next, self.rewards.step + self.rewards.ungoal, true),
            _ => (next, self.rewards.step, false),
        }
    }

    pub fn neighbors(&self, state: usize) -> Vec<usize> {
        (0..NUM_ACTIONS)
            .map(|a| self.transition(state, a).0)
            .filter(|n| *n != state)
            .collect()
    }

    /// Room label per state: connected components of non-hallway cells.
    /// Hallway cells get `None`.
    pub fn rooms(&self) -> Vec<Option<usize>> {
        let n = self.num_states();
        let mut label: Vec<Option<usize>> = vec![None; n];
        let mut next_label = 0;
        for s in 0..n {
            if label[s].is_some() || self.tile(s) == Tile::Hallway {
                continue;
            }
            let mut queue = VecDeque::from([s]);
            label[s] = Some(next_label);
            while let Some(u) = queue.pop_front() {
                for v in self.neighbors(u) {
                    if label[v].is_none() && self.tile(v) != Tile::Hallway {
                        label[v] = Some(next_label);
                        queue.push_back(v);
                    }
                }
            }
            next_label += 1;
        }
        label
    }

    /// Rooms adjacent to a hallway cell.
    pub fn hallway_rooms(&self, hallway: usize) -> BTreeSet<usize> {
        let rooms = self.rooms();
        self.neighbors(hallway)
            .into_iter()
            .filter_map(|n| rooms[n])
            .collect()
    }

    pub fn render(&self, agent: Option<usize>) -> String {
        let agent_cell = agent.map(|s| self.state_cell[s]);
        let mut out = String::with_capacity(self.tiles.len() + self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let i = r * self.cols + c;
                if Some(i) == agent_cell {
                    out.push('A');
                } else {
                    out.push(self.tiles[i].to_char());
                }
            }
            out.push('\n');
        }
        out
    }
}

impl Environment for GridWorld {
    type State = usize;

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn reset(&self, rng: &mut SeededRng) -> EnvState<usize> {
        let state = self.starts[rng.random_range(0..self.starts.len())];
        EnvState {
            state,
            legal_actions: self.legal_actions(&state),
            reward: 0.0,
            terminal: false,
            truncated: false,
        }
    }

    fn step(&self, state: &usize, action: usize, _rng: &mut SeededRng) -> Result<EnvState<usize>> {
        if self.is_terminal(state) {
            return crate::error::contract("step from a terminal grid cell");
        }
        check_legal(&self.legal_actions(state), action)?;
        let (next, reward, terminal) = self.transition(*state, action);
        Ok(EnvState {
            state: next,
            legal_actions: self.legal_actions(&next),
            reward,
            terminal,
            truncated: false,
        })
    }

    fn legal_actions(&self, state: &usize) -> Vec<usize> {
        if self.is_terminal(state) {
            Vec::new()
        } else {
            (0..NUM_ACTIONS).collect()
        }
    }

    fn is_terminal(&self, state: &usize) -> bool {
        matches!(self.tile(*state), Tile::Goal | Tile::UnGoal)
    }

    fn exact_model(&self) -> Option<Mdp> {
        let n = self.num_states();
        let mut init = vec![0.0; n];
        for s in &self.starts {
            init[*s] = 1.0 / self.starts.len() as f64;
        }
        let mut b = MdpBuilder::new(n, NUM_ACTIONS, self.gamma)
            .initial(Categorical::new(init).ok()?);
        for s in 0..n {
            if self.is_terminal(&s) {
                b.set_terminal(s);
                continue;
            }
            for a in 0..NUM_ACTIONS {
                let (next, reward, _) = self.transition(s, a);
                b.set_deterministic(s, a, next, reward);
            }
        }
        b.build().ok()
    }
}

impl DiscreteEnv for GridWorld {
    fn num_states(&self) -> usize {
        self.state_cell.len()
    }
}
