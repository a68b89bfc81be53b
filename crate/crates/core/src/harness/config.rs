//! Experiment configuration: flat `key = value` text with one `[section]`
//! per module.
//!
//! ```text
//! [experiment]
//! algo = q-learning
//! env = taxi
//! seed = 7
//! budget = 20000
//! out = runs/taxi-q
//!
//! [q-learning]
//! alpha = 0.1
//! ```
//!
//! The `[experiment]` section names the run; a second section named after
//! the algorithm overrides its hyperparameters. Anything else is rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Result, RlError};
use crate::io::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algo {
    ValueIteration,
    QLearning,
    Sarsa,
    DynaQ,
    Dqn,
    Reinforce,
    ActorCritic,
    SelfPlay,
    Cfr,
    Maml,
    Pbt,
    Evolve,
}

impl Algo {
    pub const ALL: [Algo; 12] = [
        Algo::ValueIteration,
        Algo::QLearning,
        Algo::Sarsa,
        Algo::DynaQ,
        Algo::Dqn,
        Algo::Reinforce,
        Algo::ActorCritic,
        Algo::SelfPlay,
        Algo::Cfr,
        Algo::Maml,
        Algo::Pbt,
        Algo::Evolve,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algo::ValueIteration => "value-iteration",
            Algo::QLearning => "q-learning",
            Algo::Sarsa => "sarsa",
            Algo::DynaQ => "dyna-q",
            Algo::Dqn => "dqn",
            Algo::Reinforce => "reinforce",
            Algo::ActorCritic => "actor-critic",
            Algo::SelfPlay => "selfplay",
            Algo::Cfr => "cfr",
            Algo::Maml => "maml",
            Algo::Pbt => "pbt",
            Algo::Evolve => "evolve",
        }
    }

    /// Solvers compute an answer from a known model; everything else learns.
    pub fn is_solver(self) -> bool {
        matches!(self, Algo::ValueIteration | Algo::Cfr)
    }

    /// Environments the algorithm runs on, the default first.
    pub fn envs(self) -> &'static [EnvId] {
        use EnvId::*;
        match self {
            Algo::ValueIteration | Algo::QLearning | Algo::Sarsa | Algo::DynaQ | Algo::Pbt => &[Taxi, FourRooms],
            Algo::Dqn => &[CartPole, Taxi],
            Algo::Reinforce | Algo::ActorCritic => &[CartPole, Bandit],
            Algo::SelfPlay => &[TicTacToe, Hex5],
            Algo::Cfr => &[Kuhn],
            Algo::Maml => &[LinearTasks],
            Algo::Evolve => &[OneMax],
        }
    }

    /// What one unit of `budget` counts.
    pub fn budget_unit(self) -> &'static str {
        match self {
            Algo::ValueIteration => "sweeps",
            Algo::QLearning | Algo::Sarsa | Algo::DynaQ | Algo::Reinforce | Algo::ActorCritic => "episodes",
            Algo::Dqn => "environment steps",
            Algo::Pbt => "environment steps per member",
            Algo::SelfPlay | Algo::Cfr | Algo::Maml => "iterations",
            Algo::Evolve => "generations",
        }
    }

    pub fn default_budget(self) -> u64 {
        match self {
            Algo::ValueIteration => 100_000,
            Algo::QLearning | Algo::Sarsa => 20_000,
            Algo::DynaQ => 2_000,
            Algo::Dqn => 150_000,
            Algo::Reinforce | Algo::ActorCritic => 1_000,
            Algo::SelfPlay => 10,
            Algo::Cfr => 100_000,
            Algo::Maml => 3_000,
            Algo::Pbt => 100_000,
            Algo::Evolve => 200,
        }
    }

    /// Hyperparameters and their defaults. The default's variant fixes the
    /// type a configured value must parse as.
    pub fn defaults(self) -> Vec<(&'static str, Param)> {
        use Param::*;
        let td = || {
            vec![
                ("alpha", Float(0.1)),
                ("gamma", Float(0.99)),
                ("epsilon", Float(0.1)),
                ("max_steps", Int(200)),
                ("init", Float(0.0)),
            ]
        };
        match self {
            Algo::ValueIteration => vec![("gamma", Float(0.99)), ("threshold", Float(1e-8))],
            Algo::QLearning | Algo::Sarsa => td(),
            Algo::DynaQ => {
                let mut p = td();
                p.push(("planning_steps", Int(50)));
                p
            }
            Algo::Dqn => vec![
                ("hidden", Text("64,64".into())),
                ("lr", Float(0.01)),
                ("gamma", Float(0.99)),
                ("capacity", Int(50_000)),
                ("batch", Int(32)),
                ("target_refresh", Int(500)),
                ("epsilon_start", Float(1.0)),
                ("epsilon_end", Float(0.05)),
                ("epsilon_decay", Float(0.1)),
                ("max_episode_steps", Int(500)),
                ("double", Bool(false)),
            ],
            Algo::Reinforce => vec![
                ("hidden", Text("32".into())),
                ("lr", Float(0.0005)),
                ("gamma", Float(0.99)),
                ("entropy", Float(0.0)),
                ("max_steps", Int(500)),
                ("normalize_returns", Bool(true)),
            ],
            Algo::ActorCritic => vec![
                ("hidden", Text("32".into())),
                ("policy_lr", Float(0.001)),
                ("value_lr", Float(0.001)),
                ("gamma", Float(0.99)),
                ("entropy", Float(0.0)),
                ("max_steps", Int(500)),
                ("nstep", Int(5)),
            ],
            Algo::SelfPlay => vec![
                ("hidden", Text("64".into())),
                ("games", Int(100)),
                ("simulations", Int(100)),
                ("c_puct", Float(2.5)),
                ("sampled_plies", Int(4)),
                ("window", Int(20)),
                ("train_steps", Int(500)),
                ("batch", Int(32)),
                ("lr", Float(0.05)),
                ("noise_alpha", Float(0.3)),
                ("noise_epsilon", Float(0.25)),
            ],
            Algo::Cfr => vec![("trace_every", Int(1000))],
            Algo::Maml => vec![
                ("inner_lr", Float(0.25)),
                ("outer_lr", Float(0.01)),
                ("meta_batch", Int(8)),
                ("inner_steps", Int(1)),
                ("support", Int(10)),
                ("query", Int(10)),
            ],
            Algo::Pbt => vec![
                ("population", Int(8)),
                ("alpha_lo", Float(0.01)),
                ("alpha_hi", Float(1.0)),
                ("segment", Int(10_000)),
                ("fraction", Float(0.25)),
                ("gamma", Float(0.99)),
                ("epsilon", Float(0.1)),
                ("max_episode_steps", Int(200)),
            ],
            Algo::Evolve => vec![
                ("genome_len", Int(20)),
                ("population", Int(50)),
                ("sigma", Float(0.1)),
                ("crossover", Float(0.7)),
                ("elites", Int(2)),
            ],
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algo {
    type Err = RlError;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL.into_iter().find(|a| a.id() == s).ok_or_else(|| {
            let ids: Vec<&str> = Algo::ALL.iter().map(|a| a.id()).collect();
            RlError::Usage(format!("unknown algo {s:?}; expected one of {}", ids.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnvId {
    Taxi,
    FourRooms,
    CartPole,
    Bandit,
    TicTacToe,
    Hex5,
    Kuhn,
    LinearTasks,
    OneMax,
}

impl EnvId {
    pub const ALL: [EnvId; 9] = [
        EnvId::Taxi,
        EnvId::FourRooms,
        EnvId::CartPole,
        EnvId::Bandit,
        EnvId::TicTacToe,
        EnvId::Hex5,
        EnvId::Kuhn,
        EnvId::LinearTasks,
        EnvId::OneMax,
    ];

    pub fn id(self) -> &'static str {
        match self {
            EnvId::Taxi => "taxi",
            EnvId::FourRooms => "four-rooms",
            EnvId::CartPole => "cartpole",
            EnvId::Bandit => "bandit",
            EnvId::TicTacToe => "tictactoe",
            EnvId::Hex5 => "hex5",
            EnvId::Kuhn => "kuhn",
            EnvId::LinearTasks => "linear-tasks",
            EnvId::OneMax => "onemax",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EnvId {
    type Err = RlError;

    fn from_str(s: &str) -> Result<Self> {
        EnvId::ALL.into_iter().find(|e| e.id() == s).ok_or_else(|| {
            let ids: Vec<&str> = EnvId::ALL.iter().map(|e| e.id()).collect();
            RlError::Usage(format!("unknown env {s:?}; expected one of {}", ids.join(", ")))
        })
    }
}

/// A hyperparameter value.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Param {
    /// Parses `raw` as the same variant as `self`.
    fn parse_like(&self, raw: &str) -> Option<Param> {
        match self {
            Param::Int(_) => raw.parse().ok().map(Param::Int),
            Param::Float(_) => raw.parse::<f64>().ok().filter(|v| v.is_finite()).map(Param::Float),
            Param::Bool(_) => match raw {
                "true" => Some(Param::Bool(true)),
                "false" => Some(Param::Bool(false)),
                _ => None,
            },
            Param::Text(_) => Some(Param::Text(raw.to_string())),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Int(v) => write!(f, "{v}"),
            // Debug keeps a decimal point and parses back to the same bits
            Param::Float(v) => write!(f, "{v:?}"),
            Param::Bool(v) => write!(f, "{v}"),
            Param::Text(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algo: Algo,
    pub env: EnvId,
    pub seed: u64,
    pub budget: u64,
    pub out: PathBuf,
    /// Every hyperparameter of `algo`, defaults filled in.
    pub params: BTreeMap<String, Param>,
}

const EXPERIMENT: &str = "experiment";

impl ExperimentConfig {
    /// A config with every default materialized.
    pub fn new(algo: Algo) -> Self {
        Self {
            algo,
            env: algo.envs()[0],
            seed: 0,
            budget: algo.default_budget(),
            out: PathBuf::from(format!("runs/{}", algo.id())),
            params: algo.defaults().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn with_env(mut self, env: EnvId) -> Result<Self> {
        self.env = env;
        self.check_env()?;
        Ok(self)
    }

    fn check_env(&self) -> Result<()> {
        if self.algo.envs().contains(&self.env) {
            return Ok(());
        }
        let ids: Vec<&str> = self.algo.envs().iter().map(|e| e.id()).collect();
        Err(RlError::Usage(format!(
            "{} does not run on {}; supported: {}",
            self.algo,
            self.env,
            ids.join(", ")
        )))
    }

    /// Overrides one hyperparameter, parsing `raw` as the default's type.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let current = self.params.get(key).ok_or_else(|| {
            let keys: Vec<&str> = self.params.keys().map(String::as_str).collect();
            RlError::Parse(format!("unknown key {key:?} for {}; expected one of {}", self.algo, keys.join(", ")))
        })?;
        let value = current
            .parse_like(raw)
            .ok_or_else(|| RlError::Parse(format!("{key} = {raw:?} does not parse as {}", kind(current))))?;
        self.params.insert(key.to_string(), value);
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<(String, Vec<(usize, String, String)>)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let line_no = n + 1;
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if sections.iter().any(|(s, _)| *s == name) {
                    return Err(RlError::Parse(format!("line {line_no}: section [{name}] repeated")));
                }
                sections.push((name, Vec::new()));
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(RlError::Parse(format!("line {line_no}: expected `key = value`")));
            };
            let Some((_, entries)) = sections.last_mut() else {
                return Err(RlError::Parse(format!("line {line_no}: key outside any section")));
            };
            let key = key.trim().to_string();
            if entries.iter().any(|(_, k, _)| *k == key) {
                return Err(RlError::Parse(format!("line {line_no}: key {key:?} repeated")));
            }
            entries.push((line_no, key, value.trim().to_string()));
        }

        let Some((_, head)) = sections.iter().find(|(s, _)| s == EXPERIMENT) else {
            return Err(RlError::Parse("missing [experiment] section".into()));
        };
        let lookup = |key: &str| head.iter().find(|(_, k, _)| k == key).map(|(n, _, v)| (*n, v.as_str()));
        for (n, key, _) in head {
            if !["algo", "env", "seed", "budget", "out"].contains(&key.as_str()) {
                return Err(RlError::Parse(format!("line {n}: unknown key {key:?} in [experiment]")));
            }
        }
        let Some((_, algo)) = lookup("algo") else {
            return Err(RlError::Parse("[experiment] must name an algo".into()));
        };
        let mut cfg = Self::new(algo.parse()?);
        if let Some((_, env)) = lookup("env") {
            cfg = cfg.with_env(env.parse()?)?;
        }
        let number = |key: &str| -> Result<Option<u64>> {
            match lookup(key) {
                None => Ok(None),
                Some((n, v)) => v
                    .parse()
                    .map(Some)
                    .map_err(|_| RlError::Parse(format!("line {n}: {key} = {v:?} is not a non-negative integer"))),
            }
        };
        if let Some(seed) = number("seed")? {
            cfg.seed = seed;
        }
        if let Some(budget) = number("budget")? {
            cfg.budget = budget;
        }
        if let Some((_, out)) = lookup("out") {
            cfg.out = PathBuf::from(out);
        }

        for (name, entries) in &sections {
            if name == EXPERIMENT {
                continue;
            }
            if name != cfg.algo.id() {
                return Err(RlError::Parse(format!(
                    "section [{name}] does not match algo {}; only [experiment] and [{}] are allowed",
                    cfg.algo,
                    cfg.algo
                )));
            }
            for (n, key, value) in entries {
                cfg.set(key, value).map_err(|e| match e {
                    RlError::Parse(msg) => RlError::Parse(format!("line {n}: {msg}")),
                    other => other,
                })?;
            }
        }
        Ok(cfg)
    }

    /// Every field written out, so the text parses back to an equal config.
    pub fn render(&self) -> String {
        let mut out = format!(
            "[{EXPERIMENT}]\nalgo = {}\nenv = {}\nseed = {}\nbudget = {}\nout = {}\n\n[{}]\n",
            self.algo,
            self.env,
            self.seed,
            self.budget,
            self.out.display(),
            self.algo
        );
        for (k, v) in &self.params {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// An unreadable file is a usage error, like a malformed one.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| RlError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.render())
    }

    fn param(&self, key: &str) -> Result<&Param> {
        self.params
            .get(key)
            .ok_or_else(|| RlError::Usage(format!("{} has no hyperparameter {key:?}", self.algo)))
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        match self.param(key)? {
            Param::Float(v) => Ok(*v),
            other => Err(RlError::Usage(format!("{key} is {}, not a float", kind(other)))),
        }
    }

    pub fn int(&self, key: &str) -> Result<usize> {
        match self.param(key)? {
            Param::Int(v) => usize::try_from(*v).map_err(|_| RlError::Usage(format!("{key} = {v} is too large"))),
            other => Err(RlError::Usage(format!("{key} is {}, not an integer", kind(other)))),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.param(key)? {
            Param::Bool(v) => Ok(*v),
            other => Err(RlError::Usage(format!("{key} is {}, not a boolean", kind(other)))),
        }
    }

    /// A comma-separated list of layer widths; empty means none.
    pub fn widths(&self, key: &str) -> Result<Vec<usize>> {
        let Param::Text(text) = self.param(key)? else {
            return Err(RlError::Usage(format!("{key} is not a width list")));
        };
        text.split(',')
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(|w| {
                w.parse()
                    .ok()
                    .filter(|w| *w > 0)
                    .ok_or_else(|| RlError::Usage(format!("{key}: {w:?} is not a positive width")))
            })
            .collect()
    }

    pub fn budget(&self) -> usize {
        usize::try_from(self.budget).unwrap_or(usize::MAX)
    }
}

fn kind(p: &Param) -> &'static str {
    match p {
        Param::Int(_) => "an integer",
        Param::Float(_) => "a float",
        Param::Bool(_) => "a boolean",
        Param::Text(_) => "text",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_config_materializes_defaults() {
        let cfg = ExperimentConfig::parse("[experiment]\nalgo = dyna-q\n").unwrap();
        assert_eq!(cfg.env, EnvId::Taxi);
        assert_eq!(cfg.budget, 2000);
        assert_eq!(cfg.int("planning_steps").unwrap(), 50);
        assert_eq!(cfg.params.len(), Algo::DynaQ.defaults().len());
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# run\n[experiment]\nalgo = dqn\nenv = taxi\nseed = 3 # trailing\n\n[dqn]\nhidden =\nlr = 1\ndouble = true\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.float("lr").unwrap(), 1.0);
        assert!(cfg.flag("double").unwrap());
        assert!(cfg.widths("hidden").unwrap().is_empty());
        assert_eq!(ExperimentConfig::new(Algo::Dqn).widths("hidden").unwrap(), vec![64, 64]);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let bad = [
            "[experiment]\nalgo = q-learning\nspeed = 3\n",
            "[experiment]\nalgo = q-learning\n[q-learning]\nbeta = 0.1\n",
            "[experiment]\nalgo = q-learning\n[sarsa]\nalpha = 0.1\n",
            "[experiment]\nalgo = q-learning\n[q-learning]\nalpha = fast\n",
            "[experiment]\nalgo = q-learning\n[q-learning]\nmax_steps = -1\n",
            "[experiment]\nalgo = q-learning\nseed = 1\nseed = 2\n",
            "[experiment]\nenv = taxi\n",
            "algo = q-learning\n",
            "[experiment]\nalgo q-learning\n",
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::parse(text), Err(RlError::Parse(_))), "{text}");
        }
        for text in ["[experiment]\nalgo = sgd\n", "[experiment]\nalgo = cfr\nenv = taxi\n"] {
            assert!(matches!(ExperimentConfig::parse(text), Err(RlError::Usage(_))), "{text}");
        }
    }

    #[test]
    fn every_algo_round_trips() {
        for algo in Algo::ALL {
            for env in algo.envs() {
                let cfg = ExperimentConfig::new(algo).with_env(*env).unwrap();
                assert_eq!(ExperimentConfig::parse(&cfg.render()).unwrap(), cfg);
            }
        }
    }

    proptest! {
        #[test]
        fn floats_round_trip(alpha in 0.0f64..1.0, seed: u64, budget: u64) {
            let mut cfg = ExperimentConfig::new(Algo::Sarsa);
            cfg.seed = seed;
            cfg.budget = budget;
            cfg.set("alpha", &alpha.to_string()).unwrap();
            let back = ExperimentConfig::parse(&cfg.render()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
