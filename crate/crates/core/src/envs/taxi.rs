//! The 5x5 Taxi domain.
//!
//! State id = ((row * 5 + col) * 5 + passenger) * 4 + destination, where
//! passenger 0..4 is a landmark (R, G, Y, B) and 4 means "in the taxi".
//! Actions: 0 south, 1 north, 2 east, 3 west, 4 pickup, 5 dropoff.

use rand::Rng;

use super::{check_legal, DiscreteEnv, EnvState, Environment};
use crate::dist::Categorical;
use crate::error::Result;
use crate::mdp::{Mdp, MdpBuilder};
use crate::rng::SeededRng;

pub const NUM_STATES: usize = 500;
pub const NUM_ACTIONS: usize = 6;
pub const IN_TAXI: usize = 4;

pub const SOUTH: usize = 0;
pub const NORTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;
pub const PICKUP: usize = 4;
pub const DROPOFF: usize = 5;

pub const STEP_REWARD: f64 = -1.0;
pub const ILLEGAL_REWARD: f64 = -10.0;
pub const DELIVERY_BONUS: f64 = 20.0;

const MAP: [&str; 5] = [
    "|R: | : :G|",
    "| : | : : |",
    "| : : : : |",
    "| | : | : |",
    "|Y| : |B: |",
];

/// Landmarks R, G, Y, B as (row, col).
pub const LANDMARKS: [(usize, usize); 4] = [(0, 0), (0, 4), (4, 0), (4, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaxiState {
    pub row: usize,
    pub col: usize,
    pub passenger: usize,
    pub destination: usize,
}

impl TaxiState {
    pub fn encode(&self) -> usize {
        ((self.row * 5 + self.col) * 5 + self.passenger) * 4 + self.destination
    }

    pub fn decode(id: usize) -> Self {
        let destination = id % 4;
        let rest = id / 4;
        let passenger = rest % 5;
        let cell = rest / 5;
        Self {
            row: cell / 5,
            col: cell % 5,
            passenger,
            destination,
        }
    }

    /// Delivered: the passenger sits at its destination landmark.
    pub fn is_delivered(&self) -> bool {
        self.passenger == self.destination
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Taxi;

impl Taxi {
    pub fn new() -> Self {
        Taxi
    }

    fn can_move_east(row: usize, col: usize) -> bool {
        MAP[row].as_bytes()[2 * col + 2] == b':'
    }

    /// Deterministic transition: `(next state id, reward, terminal)`.
    pub fn transition(state: usize, action: usize) -> (usize, f64, bool) {
        let mut s = TaxiState::decode(state);
        let mut reward = STEP_REWARD;
        let mut done = false;
        match action {
            SOUTH => s.row = (s.row + 1).min(4),
            NORTH => s.row = s.row.saturating_sub(1),
            EAST => {
                if s.col < 4 && Self::can_move_east(s.row, s.col) {
                    s.col += 1;
                }
            }
            WEST => {
                if s.col > 0 && Self::can_move_east(s.row, s.col - 1) {
                    s.col -= 1;
                }
            }
            PICKUP => {
                if s.passenger < IN_TAXI && LANDMARKS[s.passenger] == (s.row, s.col) {
                    s.passenger = IN_TAXI;
                } else {
                    reward = ILLEGAL_REWARD;
                }
            }
            DROPOFF => {
                if s.passenger == IN_TAXI && LANDMARKS[s.destination] == (s.row, s.col) {
                    s.passenger = s.destination;
                    reward = STEP_REWARD + DELIVERY_BONUS;
                    done = true;
                } else {
                    reward = ILLEGAL_REWARD;
                }
            }
            _ => unreachable!("taxi action {action}"),
        }
        (s.encode(), reward, done)
    }

    /// States an episode can start in: passenger waiting at a landmark other
    /// than its destination, taxi anywhere.
    pub fn start_states() -> Vec<usize> {
        (0..NUM_STATES)
            .filter(|id| {
                let s = TaxiState::decode(*id);
                s.passenger < IN_TAXI && s.passenger != s.destination
            })
            .collect()
    }

    pub fn render(state: usize) -> String {
        let s = TaxiState::decode(state);
        let mut out = String::from("+---------+\n");
        for (r, line) in MAP.iter().enumerate() {
            let mut chars: Vec<char> = line.chars().collect();
            if r == s.row {
                let c = 2 * s.col + 1;
                chars[c] = if s.passenger == IN_TAXI { '@' } else { 'T' };
            }
            out.extend(chars);
            out.push('\n');
        }
        out.push_str("+---------+");
        out
    }
}

impl Environment for Taxi {
    type State = usize;

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn reset(&self, rng: &mut SeededRng) -> EnvState<usize> {
        let row = rng.random_range(0..5);
        let col = rng.random_range(0..5);
        let passenger = rng.random_range(0..4);
        let mut destination = rng.random_range(0..3);
        if destination >= passenger {
            destination += 1;
        }
        let state = TaxiState {
            row,
            col,
            passenger,
            destination,
        }
        .encode();
        EnvState {
            state,
            legal_actions: (0..NUM_ACTIONS).collect(),
            reward: 0.0,
            terminal: false,
            truncated: false,
        }
    }

    fn step(&self, state: &usize, action: usize, _rng: &mut SeededRng) -> Result<EnvState<usize>> {
        if self.is_terminal(state) {
            return crate::error::contract("step from a terminal taxi state");
        }
        check_legal(&self.legal_actions(state), action)?;
        let (next, reward, terminal) = Self::transition(*state, action);
        Ok(EnvState {
            state: next,
            legal_actions: if terminal { Vec::new() } else { (0..NUM_ACTIONS).collect() },
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
        TaxiState::decode(*state).is_delivered()
    }

    fn exact_model(&self) -> Option<Mdp> {
        let starts = Self::start_states();
        let mut init = vec![0.0; NUM_STATES];
        for s in &starts {
            init[*s] = 1.0 / starts.len() as f64;
        }
        let mut b = MdpBuilder::new(NUM_STATES, NUM_ACTIONS, 0.99)
            .initial(Categorical::new(init).expect("uniform over start states"));
        for s in 0..NUM_STATES {
            if self.is_terminal(&s) {
                b.set_terminal(s);
                continue;
            }
            for a in 0..NUM_ACTIONS {
                let (next, reward, _) = Self::transition(s, a);
                b.set_deterministic(s, a, next, reward);
            }
        }
        Some(b.build().expect("taxi model is well formed"))
    }
}

impl DiscreteEnv for Taxi {
    fn num_states(&self) -> usize {
        NUM_STATES
    }
}

/// The taxi MDP with discount `gamma` instead of the default 0.99.
pub fn taxi_model(gamma: f64) -> Mdp {
    let base = Taxi::new().exact_model().expect("taxi has a model");
    let mut b = MdpBuilder::new(NUM_STATES, NUM_ACTIONS, gamma).initial(base.initial().clone());
    for s in 0..NUM_STATES {
        if base.is_terminal(s) {
            b.set_terminal(s);
            continue;
        }
        for a in 0..NUM_ACTIONS {
            b.set_outcomes(s, a, base.outcomes(s, a).to_vec());
        }
    }
    b.build().expect("taxi model is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn encoding_roundtrip_covers_500_states() {
        for id in 0..NUM_STATES {
            assert_eq!(TaxiState::decode(id).encode(), id);
        }
        assert_eq!(TaxiState { row: 4, col: 4, passenger: 4, destination: 3 }.encode(), 499);
    }

    #[test]
    fn reset_gives_valid_start() {
        let env = Taxi::new();
        let mut rng = seeded(1);
        for _ in 0..1000 {
            let s = env.reset(&mut rng);
            assert!(s.state < NUM_STATES);
            let t = TaxiState::decode(s.state);
            assert!(t.passenger < 4 && t.passenger != t.destination);
            assert_eq!(s.legal_actions.len(), 6);
        }
    }

    #[test]
    fn rewards_follow_the_rules() {
        let env = Taxi::new();
        let mut rng = seeded(0);
        let s = TaxiState { row: 2, col: 2, passenger: 0, destination: 1 }.encode();
        for a in [SOUTH, NORTH, EAST, WEST] {
            assert_eq!(env.step(&s, a, &mut rng).unwrap().reward, -1.0);
        }
        let pick = env.step(&s, PICKUP, &mut rng).unwrap();
        assert_eq!(pick.reward, -10.0);
        assert_eq!(pick.state, s);
        assert_eq!(env.step(&s, DROPOFF, &mut rng).unwrap().reward, -10.0);

        // pick up at R, drop at G
        let at_r = TaxiState { row: 0, col: 0, passenger: 0, destination: 1 }.encode();
        let picked = env.step(&at_r, PICKUP, &mut rng).unwrap();
        assert_eq!(picked.reward, -1.0);
        assert_eq!(TaxiState::decode(picked.state).passenger, IN_TAXI);
        let at_g = TaxiState { row: 0, col: 4, passenger: IN_TAXI, destination: 1 }.encode();
        let done = env.step(&at_g, DROPOFF, &mut rng).unwrap();
        assert_eq!(done.reward, 19.0);
        assert!(done.terminal);
        assert!(env.step(&done.state, SOUTH, &mut rng).is_err());
    }

    #[test]
    fn walls_block_east_west() {
        // "|R: | : :G|": wall between col 1 and col 2 on row 0
        let s = TaxiState { row: 0, col: 1, passenger: 0, destination: 1 }.encode();
        assert_eq!(Taxi::transition(s, EAST).0, s);
        let s = TaxiState { row: 0, col: 0, passenger: 0, destination: 1 }.encode();
        assert_eq!(TaxiState::decode(Taxi::transition(s, EAST).0).col, 1);
        let s = TaxiState { row: 4, col: 1, passenger: 0, destination: 1 }.encode();
        assert_eq!(Taxi::transition(s, WEST).0, s);
    }

    #[test]
    fn illegal_action_ids_are_contract_errors() {
        let env = Taxi::new();
        let mut rng = seeded(0);
        let err = env.step(&4, 6, &mut rng).unwrap_err();
        assert!(matches!(err, crate::error::RlError::Contract(_)));
    }

    #[test]
    fn model_is_deterministic_with_500_states() {
        let mdp = Taxi::new().exact_model().unwrap();
        assert_eq!(mdp.num_states(), 500);
        assert_eq!(mdp.num_actions(), 6);
        assert!(mdp.is_deterministic());
        // 300 start states, 100 with the passenger aboard, 4 delivered
        let reachable = mdp.reachable_states().iter().filter(|r| **r).count();
        assert_eq!(reachable, 404);
    }
}
