//! Per-run metric logs: one row per step index, strictly increasing.

use std::path::Path;

use super::config::Algo;
use crate::error::{contract, Result};
use crate::io::CsvTable;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub step: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricLog {
    columns: Vec<String>,
    rows: Vec<MetricRow>,
}

impl MetricLog {
    /// Metric names; the leading `step` column is implied.
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// The log whose header matches [`metrics_header`] for `algo`.
    pub fn for_algo(algo: Algo) -> Self {
        Self::new(&metrics_header(algo)[1..])
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, step: u64, values: &[f64]) -> Result<()> {
        if values.len() != self.columns.len() {
            return contract(format!("{} metric values for {} columns", values.len(), self.columns.len()));
        }
        if let Some(last) = self.rows.last() {
            if step <= last.step {
                return contract(format!("step {step} does not follow step {}", last.step));
            }
        }
        self.rows.push(MetricRow {
            step,
            values: values.to_vec(),
        });
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.column(name)?.last().copied()
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut header = vec!["step"];
        header.extend(self.columns.iter().map(String::as_str));
        let mut t = CsvTable::new(&header);
        for r in &self.rows {
            t.push(std::iter::once(r.step.to_string()).chain(r.values.iter().map(|v| format!("{v:?}"))));
        }
        t
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_csv().save(path)
    }
}

/// The `metrics.csv` header each algorithm writes.
pub fn metrics_header(algo: Algo) -> &'static [&'static str] {
    match algo {
        Algo::ValueIteration => &["step", "max_change"],
        Algo::QLearning | Algo::Sarsa | Algo::DynaQ => &["step", "env_steps", "episode_return", "epsilon"],
        Algo::Dqn => &["step", "episode_return", "epsilon", "mean_td_loss", "target_refresh_count"],
        Algo::Reinforce | Algo::ActorCritic => &["step", "episode_return", "policy_entropy", "value_loss"],
        Algo::SelfPlay => &[
            "step",
            "examples",
            "buffer",
            "policy_loss",
            "value_loss",
            "first_player_wins",
            "second_player_wins",
            "draws",
        ],
        Algo::Cfr => &["step", "exploitability"],
        Algo::Maml => &["step", "query_loss"],
        Algo::Pbt => &["step", "best_score", "mean_score", "best_alpha"],
        Algo::Evolve => &["step", "best_fitness"],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_must_increase() {
        let mut log = MetricLog::new(&["loss"]);
        log.push(1, &[0.5]).unwrap();
        log.push(3, &[0.25]).unwrap();
        assert!(log.push(3, &[0.1]).is_err());
        assert!(log.push(2, &[0.1]).is_err());
        assert!(log.push(4, &[0.1, 0.2]).is_err());
        assert_eq!(log.to_csv().render(), "step,loss\n1,0.5\n3,0.25\n");
        assert_eq!(log.last("loss"), Some(0.25));
    }

    #[test]
    fn headers_match_algos() {
        for algo in Algo::ALL {
            let table = MetricLog::for_algo(algo).to_csv();
            let header: Vec<&str> = table.header().iter().map(String::as_str).collect();
            assert_eq!(header, metrics_header(algo));
        }
    }
}
