//! Exact planning and tabular model-free learning.

use std::path::Path;

use rand::Rng;

use crate::error::{Result, RlError};
use crate::io::{read_csv, write_atomic};
use crate::rng::SeededRng;

pub mod dyna;
pub mod options;
pub mod td;
pub mod vi;

pub use dyna::{dyna_q, dyna_q_observed, DynaConfig, LearnedModel, ModelSource};
pub use options::{hallway_options, smdp_q_over_options, GridOption, OptionsConfig, SmdpRun};
pub use td::{
    evaluate_greedy, q_learning, q_learning_observed, sarsa, sarsa_observed, EpisodeStats,
    EpsilonSchedule, NoObserver, Observer, QLearner, StepRecord, TdConfig,
};
pub use vi::{bellman_residual, q_from_values, value_iteration, value_iteration_sweep, ViResult};

/// State values, one per state id.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub values: Vec<f64>,
}

impl ValueTable {
    pub fn zeros(num_states: usize) -> Self {
        Self {
            values: vec![0.0; num_states],
        }
    }

    pub fn get(&self, s: usize) -> f64 {
        self.values[s]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with header `state,action,value`; the action column is empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,action,value\n");
        for (s, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{s},,{v}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = read_csv(text, &["state", "action", "value"])?;
        let mut values = vec![0.0; rows.len()];
        for row in rows {
            let s: usize = parse_field(&row[0])?;
            let v: f64 = parse_field(&row[2])?;
            *values
                .get_mut(s)
                .ok_or_else(|| RlError::Parse(format!("state {s} out of order")))? = v;
        }
        Ok(Self { values })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.to_csv())
    }
}

/// Action values, row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(num_states: usize, num_actions: usize, init: f64) -> Self {
        Self {
            num_states,
            num_actions,
            values: vec![init; num_states * num_actions],
        }
    }

    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self::new(num_states, num_actions, 0.0)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.num_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn row_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn greedy(&self, s: usize) -> usize {
        crate::dist::argmax(self.row(s))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,action,value\n");
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                out.push_str(&format!("{s},{a},{}\n", self.get(s, a)));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = read_csv(text, &["state", "action", "value"])?;
        let mut entries = Vec::with_capacity(rows.len());
        let (mut max_s, mut max_a) = (0, 0);
        for row in rows {
            let s: usize = parse_field(&row[0])?;
            let a: usize = parse_field(&row[1])?;
            let v: f64 = parse_field(&row[2])?;
            max_s = max_s.max(s);
            max_a = max_a.max(a);
            entries.push((s, a, v));
        }
        if entries.is_empty() {
            return Err(RlError::Parse("empty Q table".into()));
        }
        let mut q = QTable::zeros(max_s + 1, max_a + 1);
        if entries.len() != q.values.len() {
            return Err(RlError::Parse(format!(
                "{} rows for a {}x{} table",
                entries.len(),
                q.num_states,
                q.num_actions
            )));
        }
        for (s, a, v) in entries {
            q.set(s, a, v);
        }
        Ok(q)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.to_csv())
    }
}

fn parse_field<T: std::str::FromStr>(field: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| RlError::Parse(format!("cannot parse {field:?}")))
}

/// Per-state greedy action, lowest action id on ties.
pub fn greedy_policy(q: &QTable) -> Vec<usize> {
    (0..q.num_states()).map(|s| q.greedy(s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Lowest,
    Random,
}

/// Greedy with probability `1 - epsilon`, otherwise uniform over all actions
/// (the greedy one included).
pub fn epsilon_greedy(q_row: &[f64], epsilon: f64, rng: &mut SeededRng) -> usize {
    epsilon_greedy_with(q_row, epsilon, TieBreak::Lowest, rng)
}

pub fn epsilon_greedy_with(
    q_row: &[f64],
    epsilon: f64,
    ties: TieBreak,
    rng: &mut SeededRng,
) -> usize {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return rng.random_range(0..q_row.len());
    }
    match ties {
        TieBreak::Lowest => crate::dist::argmax(q_row),
        TieBreak::Random => {
            let best = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ties: Vec<usize> = (0..q_row.len()).filter(|a| q_row[*a] == best).collect();
            ties[rng.random_range(0..ties.len())]
        }
    }
}

/// Fraction of `states` where `learned`'s greedy action is optimal under
/// `oracle`, i.e. attains the oracle row maximum within `tol`.
///
/// An oracle row with several maximal actions accepts any of them, so the
/// score does not depend on how either table breaks ties.
pub fn optimal_action_agreement(learned: &QTable, oracle: &QTable, states: &[usize], tol: f64) -> f64 {
    if states.is_empty() {
        return 1.0;
    }
    let hits = states
        .iter()
        .filter(|s| oracle.get(**s, learned.greedy(**s)) >= oracle.max(**s) - tol)
        .count();
    hits as f64 / states.len() as f64
}

/// Fraction of `states` where both greedy policies pick the same action id.
pub fn exact_policy_agreement(a: &QTable, b: &QTable, states: &[usize]) -> f64 {
    if states.is_empty() {
        return 1.0;
    }
    let hits = states.iter().filter(|s| a.greedy(**s) == b.greedy(**s)).count();
    hits as f64 / states.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn greedy_examples() {
        let mut q = QTable::zeros(2, 3);
        q.row_mut(0).copy_from_slice(&[1.0, 3.0, 2.0]);
        q.row_mut(1).copy_from_slice(&[2.0, 2.0, 1.0]);
        assert_eq!(greedy_policy(&q), vec![1, 0]);
    }

    #[test]
    fn epsilon_extremes() {
        let mut rng = seeded(2);
        let row = [0.0, 5.0, 1.0, -1.0];
        for _ in 0..1000 {
            assert_eq!(epsilon_greedy(&row, 0.0, &mut rng), 1);
        }
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[epsilon_greedy(&row, 1.0, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn epsilon_greedy_frequency() {
        let mut rng = seeded(8);
        let row = [0.0, 0.0, 3.0, 0.0];
        let n = 100_000;
        let greedy = (0..n)
            .filter(|_| epsilon_greedy(&row, 0.1, &mut rng) == 2)
            .count();
        let freq = greedy as f64 / n as f64;
        // 1 - eps + eps / |A|
        assert!((freq - 0.925).abs() < 0.01, "{freq}");
    }

    #[test]
    fn random_tie_break_spreads() {
        let mut rng = seeded(1);
        let row = [1.0, 1.0, 0.0];
        let mut seen = [false; 3];
        for _ in 0..100 {
            seen[epsilon_greedy_with(&row, 0.0, TieBreak::Random, &mut rng)] = true;
        }
        assert_eq!(seen, [true, true, false]);
    }

    #[test]
    fn csv_roundtrip() {
        let mut q = QTable::zeros(3, 2);
        q.set(1, 1, -0.1 + 0.2);
        q.set(2, 0, 1e-300);
        let back = QTable::from_csv(&q.to_csv()).unwrap();
        assert_eq!(back, q);
        assert!(q.to_csv().starts_with("state,action,value\n"));
        let v = ValueTable {
            values: vec![1.5, -2.0, std::f64::consts::PI],
        };
        assert_eq!(ValueTable::from_csv(&v.to_csv()).unwrap(), v);
        assert!(QTable::from_csv("state,value\n0,1\n").is_err());
    }

    #[test]
    fn agreement_accepts_any_optimal_action() {
        let mut oracle = QTable::zeros(2, 2);
        oracle.row_mut(0).copy_from_slice(&[1.0, 1.0]);
        oracle.row_mut(1).copy_from_slice(&[0.0, 2.0]);
        let mut learned = QTable::zeros(2, 2);
        learned.row_mut(0).copy_from_slice(&[0.0, 0.5]);
        learned.row_mut(1).copy_from_slice(&[1.0, 0.0]);
        assert_eq!(optimal_action_agreement(&learned, &oracle, &[0, 1], 1e-9), 0.5);
        assert_eq!(exact_policy_agreement(&learned, &oracle, &[0, 1]), 0.0);
    }

    proptest! {
        #[test]
        fn greedy_is_shift_invariant(row in prop::collection::vec(-100.0f64..100.0, 1..8), c in -50.0f64..50.0) {
            let mut q = QTable::zeros(1, row.len());
            q.row_mut(0).copy_from_slice(&row);
            let before = q.greedy(0);
            for v in q.row_mut(0) {
                *v += c;
            }
            // shifting can only merge values that were within rounding of each other
            let after = q.greedy(0);
            prop_assert!(before == after || (row[before] - row[after]).abs() < 1e-12);
        }
    }
}
