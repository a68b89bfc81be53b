//! Experiment plumbing behind the `rlk` binary: configs, metric logs,
//! training runs, tournaments and the scripted acceptance checks.

pub mod config;
pub mod metrics;
pub mod reproduce;
pub mod run;
pub mod tournament;

pub use config::{Algo, EnvId, ExperimentConfig, Param};
pub use metrics::{metrics_header, MetricLog, MetricRow};
pub use reproduce::{determinism_against, reproduce, reproduce_to, Report, CRITERIA};
pub use run::{evaluate, load_run, run_experiment, RunOutcome};
pub use tournament::{tournament, AgentSpec, GameId, TournamentConfig, TournamentResult};
