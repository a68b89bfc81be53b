//! Environment zoo behind one step interface.
//!
//! Environments are stateless rule objects: the episode state is a value the
//! caller threads through [`Environment::step`], so cloning a state forks the
//! episode.

use std::fmt::Debug;

use crate::error::Result;
use crate::mdp::Mdp;
use crate::rng::SeededRng;

pub mod bandit;
pub mod board;
pub mod cartpole;
pub mod grid;
pub mod hex;
pub mod kuhn;
pub mod taxi;
pub mod tictactoe;

pub use bandit::{Bandit, BanditNoise};
pub use board::{BoardState, Cell, Game, GameEnv, GameResult, Player};
pub use cartpole::{CartPole, CartPoleState};
pub use grid::{GridRewards, GridWorld, Tile};
pub use hex::Hex;
pub use kuhn::{KuhnAction, KuhnEnv, KuhnState};
pub use taxi::Taxi;
pub use tictactoe::TicTacToe;

/// What the agent sees after `reset` or `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState<S> {
    pub state: S,
    pub legal_actions: Vec<usize>,
    /// Reward accrued on entering `state`.
    pub reward: f64,
    pub terminal: bool,
    /// The episode hit its step cap without reaching a terminal state.
    pub truncated: bool,
}

impl<S> EnvState<S> {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

pub trait Environment {
    type State: Clone + Debug + PartialEq;

    /// Size of the action id space; legal actions are a subset of `0..num_actions()`.
    fn num_actions(&self) -> usize;

    fn reset(&self, rng: &mut SeededRng) -> EnvState<Self::State>;

    /// Applies `action`; an action outside `legal_actions(state)` or a step
    /// from a terminal state is a contract violation.
    fn step(
        &self,
        state: &Self::State,
        action: usize,
        rng: &mut SeededRng,
    ) -> Result<EnvState<Self::State>>;

    fn legal_actions(&self, state: &Self::State) -> Vec<usize>;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// The exact MDP where the rules define a tractable one.
    fn exact_model(&self) -> Option<Mdp> {
        None
    }
}

/// Environments whose states are dense ids `0..num_states()`.
pub trait DiscreteEnv: Environment<State = usize> {
    fn num_states(&self) -> usize;
}

/// Environments observed through a real vector (tabular ones via one-hot).
pub trait VectorEnv: Environment {
    fn observation_width(&self) -> usize;
    fn observe(&self, state: &Self::State) -> Vec<f64>;
}

/// Lifts a discrete environment to one-hot vector observations.
#[derive(Debug, Clone)]
pub struct OneHot<E>(pub E);

impl<E: DiscreteEnv> Environment for OneHot<E> {
    type State = usize;

    fn num_actions(&self) -> usize {
        self.0.num_actions()
    }

    fn reset(&self, rng: &mut SeededRng) -> EnvState<usize> {
        self.0.reset(rng)
    }

    fn step(&self, state: &usize, action: usize, rng: &mut SeededRng) -> Result<EnvState<usize>> {
        self.0.step(state, action, rng)
    }

    fn legal_actions(&self, state: &usize) -> Vec<usize> {
        self.0.legal_actions(state)
    }

    fn is_terminal(&self, state: &usize) -> bool {
        self.0.is_terminal(state)
    }

    fn exact_model(&self) -> Option<Mdp> {
        self.0.exact_model()
    }
}

impl<E: DiscreteEnv> VectorEnv for OneHot<E> {
    fn observation_width(&self) -> usize {
        self.0.num_states()
    }

    fn observe(&self, state: &usize) -> Vec<f64> {
        let mut v = vec![0.0; self.0.num_states()];
        v[*state] = 1.0;
        v
    }
}

pub(crate) fn check_legal(legal: &[usize], action: usize) -> Result<()> {
    if legal.contains(&action) {
        Ok(())
    } else {
        crate::error::contract(format!("action {action} is not legal here ({legal:?})"))
    }
}
