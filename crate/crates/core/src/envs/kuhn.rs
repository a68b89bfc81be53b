//! Kuhn poker: three cards, one card each, one betting round, antes of 1.

use std::fmt;

use rand::Rng;

use super::{EnvState, Environment};
use crate::error::{contract, Result};
use crate::rng::SeededRng;

pub const CARD_NAMES: [char; 3] = ['J', 'Q', 'K'];
pub const ANTE: f64 = 1.0;
pub const BET: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KuhnAction {
    Check,
    Bet,
    Call,
    Fold,
}

impl KuhnAction {
    pub const ALL: [KuhnAction; 4] = [Self::Check, Self::Bet, Self::Call, Self::Fold];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    pub fn symbol(self) -> char {
        match self {
            Self::Check => 'c',
            Self::Bet => 'b',
            Self::Call => 'k',
            Self::Fold => 'f',
        }
    }
}

/// Legal actions after a betting history; empty once the hand is over.
pub fn legal_after(history: &[KuhnAction]) -> Vec<KuhnAction> {
    use KuhnAction::*;
    match history {
        [] | [Check] => vec![Check, Bet],
        [Bet] | [Check, Bet] => vec![Call, Fold],
        _ => Vec::new(),
    }
}

pub fn is_terminal_history(history: &[KuhnAction]) -> bool {
    use KuhnAction::*;
    matches!(
        history,
        [Check, Check] | [Bet, Call] | [Bet, Fold] | [Check, Bet, Call] | [Check, Bet, Fold]
    )
}

/// Player to act (0 or 1) after `history`.
pub fn to_act(history: &[KuhnAction]) -> usize {
    history.len() % 2
}

/// Chips each player has put in the pot.
pub fn contributions(history: &[KuhnAction]) -> [f64; 2] {
    let mut pot = [ANTE, ANTE];
    for (i, a) in history.iter().enumerate() {
        if matches!(a, KuhnAction::Bet | KuhnAction::Call) {
            pot[i % 2] += BET;
        }
    }
    pot
}

/// Net chips won by player 0 at a terminal history. Folding forfeits the
/// folder's contribution; at showdown the higher card takes the pot.
pub fn payoff(cards: [u8; 2], history: &[KuhnAction]) -> f64 {
    debug_assert!(is_terminal_history(history));
    let pot = contributions(history);
    if let Some(KuhnAction::Fold) = history.last() {
        let folder = (history.len() - 1) % 2;
        return if folder == 0 { -pot[0] } else { pot[1] };
    }
    if cards[0] > cards[1] {
        pot[1]
    } else {
        -pot[0]
    }
}

pub fn history_string(history: &[KuhnAction]) -> String {
    history.iter().map(|a| a.symbol()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KuhnState {
    /// Cards dealt to players 0 and 1: 0 = J, 1 = Q, 2 = K.
    pub cards: [u8; 2],
    pub history: Vec<KuhnAction>,
}

impl KuhnState {
    pub fn new(cards: [u8; 2]) -> Self {
        Self {
            cards,
            history: Vec::new(),
        }
    }

    pub fn contributions(&self) -> [f64; 2] {
        contributions(&self.history)
    }

    pub fn is_terminal(&self) -> bool {
        is_terminal_history(&self.history)
    }

    pub fn to_act(&self) -> usize {
        to_act(&self.history)
    }

    /// What the player to act can see: own card plus the public history.
    pub fn info_set_key(&self) -> String {
        let card = CARD_NAMES[self.cards[self.to_act()] as usize];
        format!("{card}{}", history_string(&self.history))
    }
}

impl fmt::Display for KuhnState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}:{}",
            CARD_NAMES[self.cards[0] as usize],
            CARD_NAMES[self.cards[1] as usize],
            history_string(&self.history)
        )
    }
}

/// Kuhn poker as an environment played by both seats in turn; the reward
/// on the final step is player 0's net chips.
#[derive(Debug, Clone, Copy, Default)]
pub struct KuhnEnv;

impl Environment for KuhnEnv {
    type State = KuhnState;

    fn num_actions(&self) -> usize {
        KuhnAction::ALL.len()
    }

    fn reset(&self, rng: &mut SeededRng) -> EnvState<KuhnState> {
        let first = rng.random_range(0..3u8);
        let mut second = rng.random_range(0..2u8);
        if second >= first {
            second += 1;
        }
        let state = KuhnState::new([first, second]);
        EnvState {
            legal_actions: self.legal_actions(&state),
            state,
            reward: 0.0,
            terminal: false,
            truncated: false,
        }
    }

    fn step(&self, state: &KuhnState, action: usize, _rng: &mut SeededRng) -> Result<EnvState<KuhnState>> {
        let legal = legal_after(&state.history);
        let Some(a) = KuhnAction::from_id(action).filter(|a| legal.contains(a)) else {
            return contract(format!(
                "action {action} is not legal after {:?}",
                history_string(&state.history)
            ));
        };
        let mut next = state.clone();
        next.history.push(a);
        let terminal = next.is_terminal();
        let reward = if terminal { payoff(next.cards, &next.history) } else { 0.0 };
        Ok(EnvState {
            legal_actions: self.legal_actions(&next),
            state: next,
            reward,
            terminal,
            truncated: false,
        })
    }

    fn legal_actions(&self, state: &KuhnState) -> Vec<usize> {
        legal_after(&state.history).into_iter().map(KuhnAction::id).collect()
    }

    fn is_terminal(&self, state: &KuhnState) -> bool {
        state.is_terminal()
    }
}
