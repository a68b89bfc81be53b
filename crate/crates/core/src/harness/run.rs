//! Runs one configured experiment and writes its artifacts:
//! `metrics.csv`, `checkpoint.txt` and the resolved `config.cfg`.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::{Algo, EnvId, ExperimentConfig};
use super::metrics::MetricLog;
use crate::cfr::{cfr_solve, expected_value, exploitability, StrategyProfile};
use crate::dqn::{dqn_train, evaluate_q_net, DqnConfig, TdMode};
use crate::envs::{
    Bandit, BanditNoise, CartPole, DiscreteEnv, Environment, Game, GridWorld, Hex, OneHot, Taxi, TicTacToe,
    VectorEnv,
};
use crate::error::{Result, RlError};
use crate::io::{write_atomic, CsvTable};
use crate::mdp::Mdp;
use crate::meta::{
    evolve, log_spaced, maml_train, post_adaptation_loss, EvolveConfig, LinearFamily, MamlConfig, PbtConfig,
    TabularSetup,
};
use crate::neural::{Activation, InitScale, Mlp};
use crate::policy::{
    actor_critic_train, reinforce_train, run_episode, ActorCriticConfig, PolicyNet, ReinforceConfig, TargetSpec,
    TrainingLog, ValueNet,
};
use crate::rng::{seeded, SeededRng};
use crate::search::{
    play_match, DualHeadNet, MctsAgent, MctsConfig, RandomAgent, Selection, SelfPlayConfig,
};
use crate::search::{self_play_train, Dirichlet};
use crate::tabular::{
    dyna_q_observed, evaluate_greedy, optimal_action_agreement, q_from_values, q_learning_observed,
    sarsa_observed, value_iteration, value_iteration_sweep, DynaConfig, EpisodeStats, EpsilonSchedule, QTable,
    TdConfig, TieBreak, ValueTable,
};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const CONFIG_FILE: &str = "config.cfg";
pub const EVAL_FILE: &str = "eval.csv";

/// Episodes (or games, tasks) used by [`evaluate`] when none are given.
pub const DEFAULT_EVAL_EPISODES: usize = 100;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: MetricLog,
    /// Headline numbers, e.g. the final greedy return.
    pub summary: Vec<(String, f64)>,
    pub files: Vec<PathBuf>,
}

struct Trained {
    metrics: MetricLog,
    checkpoint: String,
    extras: Vec<(&'static str, String)>,
    summary: Vec<(String, f64)>,
}

impl Trained {
    fn new(algo: Algo, checkpoint: String) -> Self {
        Self {
            metrics: MetricLog::for_algo(algo),
            checkpoint,
            extras: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn note(mut self, name: &str, value: f64) -> Self {
        self.summary.push((name.to_string(), value));
        self
    }
}

/// Trains or solves as configured. Every stochastic choice draws from one
/// generator seeded with `cfg.seed`, so equal configs give equal files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let cfg = cfg.clone().with_env(cfg.env)?;
    let mut rng = seeded(cfg.seed);
    let trained = match cfg.algo {
        Algo::ValueIteration => solve_values(&cfg)?,
        Algo::QLearning | Algo::Sarsa | Algo::DynaQ => match cfg.env {
            EnvId::Taxi => td_control(&cfg, &Taxi::new(), &mut rng)?,
            _ => td_control(&cfg, &GridWorld::four_rooms(), &mut rng)?,
        },
        Algo::Dqn => match cfg.env {
            EnvId::Taxi => dqn(&cfg, &OneHot(Taxi::new()), &mut rng)?,
            _ => dqn(&cfg, &CartPole::new(), &mut rng)?,
        },
        Algo::Reinforce | Algo::ActorCritic => match cfg.env {
            EnvId::Bandit => policy_gradient(&cfg, &pg_bandit(), &mut rng)?,
            _ => policy_gradient(&cfg, &CartPole::new(), &mut rng)?,
        },
        Algo::SelfPlay => match cfg.env {
            EnvId::Hex5 => selfplay(&cfg, &Hex::new(5), &mut rng)?,
            _ => selfplay(&cfg, &TicTacToe, &mut rng)?,
        },
        Algo::Cfr => cfr(&cfg)?,
        Algo::Maml => maml(&cfg, &mut rng)?,
        Algo::Pbt => match cfg.env {
            EnvId::Taxi => pbt(&cfg, &Taxi::new(), Taxi::start_states(), &mut rng)?,
            _ => {
                let grid = GridWorld::four_rooms();
                let starts = grid.start_states().to_vec();
                pbt(&cfg, &grid, starts, &mut rng)?
            }
        },
        Algo::Evolve => evolution(&cfg, &mut rng)?,
    };

    fs::create_dir_all(&cfg.out)?;
    let mut files = Vec::new();
    let mut put = |name: &str, text: &str| -> Result<()> {
        let path = cfg.out.join(name);
        write_atomic(&path, text)?;
        files.push(path);
        Ok(())
    };
    put(METRICS_FILE, &trained.metrics.to_csv().render())?;
    put(CHECKPOINT_FILE, &trained.checkpoint)?;
    for (name, text) in &trained.extras {
        put(name, text)?;
    }
    put(CONFIG_FILE, &cfg.render())?;
    Ok(RunOutcome {
        metrics: trained.metrics,
        summary: trained.summary,
        files,
    })
}

/// The three-armed Bernoulli bandit used by the policy-gradient runs.
pub fn pg_bandit() -> Bandit {
    Bandit::new(vec![0.2, 0.5, 0.8], BanditNoise::Bernoulli).expect("valid arms")
}

fn tabular_model(env: EnvId, gamma: f64) -> Mdp {
    match env {
        EnvId::Taxi => crate::envs::taxi::taxi_model(gamma),
        _ => GridWorld::four_rooms()
            .with_gamma(gamma)
            .exact_model()
            .expect("grid worlds have a model"),
    }
}

fn tabular_starts(env: EnvId) -> Vec<usize> {
    match env {
        EnvId::Taxi => Taxi::start_states(),
        _ => GridWorld::four_rooms().start_states().to_vec(),
    }
}

/// Non-terminal states reachable from the start distribution.
pub fn scored_states(mdp: &Mdp) -> Vec<usize> {
    mdp.reachable_states()
        .iter()
        .enumerate()
        .filter(|(s, r)| **r && !mdp.is_terminal(*s))
        .map(|(s, _)| s)
        .collect()
}

fn solve_values(cfg: &ExperimentConfig) -> Result<Trained> {
    let mdp = tabular_model(cfg.env, cfg.float("gamma")?);
    let threshold = cfg.float("threshold")?;
    let mut values = vec![0.0; mdp.num_states()];
    let mut log = MetricLog::for_algo(cfg.algo);
    for sweep in 1..=cfg.budget {
        let next = value_iteration_sweep(&mdp, &values);
        let change = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        log.push(sweep, &[change])?;
        if !change.is_finite() {
            return Err(RlError::Divergence(format!("value iteration diverged at sweep {sweep}")));
        }
        if change < threshold {
            break;
        }
    }
    let residual = crate::tabular::bellman_residual(&mdp, &values);
    let table = ValueTable { values };
    let mut t = Trained::new(cfg.algo, table.to_csv()).note("sweeps", log.len() as f64);
    t.metrics = log;
    Ok(t.note("bellman_residual", residual))
}

fn td_config(cfg: &ExperimentConfig) -> Result<TdConfig> {
    Ok(TdConfig {
        alpha: cfg.float("alpha")?,
        gamma: cfg.float("gamma")?,
        epsilon: EpsilonSchedule::constant(cfg.float("epsilon")?),
        episodes: cfg.budget(),
        max_steps: cfg.int("max_steps")?,
        init: cfg.float("init")?,
        ties: TieBreak::Lowest,
    })
}

fn td_control<E: DiscreteEnv>(cfg: &ExperimentConfig, env: &E, rng: &mut SeededRng) -> Result<Trained> {
    let td = td_config(cfg)?;
    let mut rows: Vec<EpisodeStats> = Vec::new();
    let mut record = |stats: &EpisodeStats, _: &QTable| {
        rows.push(*stats);
        true
    };
    let q = match cfg.algo {
        Algo::QLearning => q_learning_observed(env, &td, rng, &mut record)?,
        Algo::Sarsa => sarsa_observed(env, &td, rng, &mut record)?,
        _ => {
            let dyna = DynaConfig::new(td.clone(), cfg.int("planning_steps")?);
            dyna_q_observed(env, &dyna, rng, &mut record)?.0
        }
    };
    let mut log = MetricLog::for_algo(cfg.algo);
    for r in &rows {
        log.push(r.episode as u64, &[r.total_steps as f64, r.episode_return, r.epsilon])?;
    }
    let agreement = tabular_agreement(cfg.env, td.gamma, &q)?;
    let mut t = Trained::new(cfg.algo, q.to_csv()).note("oracle_agreement", agreement);
    t.metrics = log;
    Ok(t)
}

/// Share of scored states where `q`'s greedy action is optimal.
fn tabular_agreement(env: EnvId, gamma: f64, q: &QTable) -> Result<f64> {
    let mdp = tabular_model(env, gamma);
    let oracle = q_from_values(&mdp, &value_iteration(&mdp, 1e-10)?.values.values);
    Ok(optimal_action_agreement(q, &oracle, &scored_states(&mdp), 1e-6))
}

fn dqn_config(cfg: &ExperimentConfig) -> Result<DqnConfig> {
    Ok(DqnConfig {
        hidden: cfg.widths("hidden")?,
        activation: Activation::Relu,
        gamma: cfg.float("gamma")?,
        lr: cfg.float("lr")?,
        capacity: cfg.int("capacity")?,
        batch: cfg.int("batch")?,
        target_refresh: cfg.int("target_refresh")?,
        epsilon: EpsilonSchedule::linear(
            cfg.float("epsilon_start")?,
            cfg.float("epsilon_end")?,
            cfg.float("epsilon_decay")?,
        ),
        steps: cfg.budget(),
        mode: if cfg.flag("double")? { TdMode::DoubleDqn } else { TdMode::Dqn },
        warmup: None,
        max_episode_steps: cfg.int("max_episode_steps")?,
        grad_clip: None,
    })
}

fn dqn<E: VectorEnv>(cfg: &ExperimentConfig, env: &E, rng: &mut SeededRng) -> Result<Trained> {
    let dc = dqn_config(cfg)?;
    if cfg.budget == 0 {
        let net = dc.build_net(env.observation_width(), env.num_actions(), rng)?;
        return Ok(Trained::new(cfg.algo, net.to_checkpoint()));
    }
    let run = dqn_train(env, &dc, rng)?;
    let mut log = MetricLog::for_algo(cfg.algo);
    for m in &run.metrics {
        log.push(
            m.step as u64,
            &[m.episode_return, m.epsilon, m.mean_td_loss, m.target_refresh_count as f64],
        )?;
    }
    let recent = recent_mean(&log.column("episode_return").unwrap_or_default(), 10);
    let mut t = Trained::new(cfg.algo, run.net.to_checkpoint()).note("recent_mean_return", recent);
    t.metrics = log;
    Ok(t)
}

fn recent_mean(values: &[f64], k: usize) -> f64 {
    let tail = &values[values.len().saturating_sub(k)..];
    if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

fn policy_gradient<E: VectorEnv>(cfg: &ExperimentConfig, env: &E, rng: &mut SeededRng) -> Result<Trained> {
    let hidden = cfg.widths("hidden")?;
    let mut policy = PolicyNet::new(env.observation_width(), &hidden, env.num_actions(), rng)?;
    let mut value = match cfg.algo {
        Algo::ActorCritic => Some(ValueNet::new(env.observation_width(), &hidden, rng)?),
        _ => None,
    };
    let log = if cfg.budget == 0 {
        TrainingLog::default()
    } else if let Some(value) = value.as_mut() {
        let ac = ActorCriticConfig {
            policy_lr: cfg.float("policy_lr")?,
            value_lr: cfg.float("value_lr")?,
            gamma: cfg.float("gamma")?,
            episodes: cfg.budget(),
            entropy_coef: cfg.float("entropy")?,
            max_steps: cfg.int("max_steps")?,
            target: TargetSpec::AdvantageNStep(cfg.int("nstep")?),
        };
        actor_critic_train(env, &mut policy, value, &ac, rng)?
    } else {
        let rc = ReinforceConfig {
            lr: cfg.float("lr")?,
            gamma: cfg.float("gamma")?,
            episodes: cfg.budget(),
            entropy_coef: cfg.float("entropy")?,
            max_steps: cfg.int("max_steps")?,
            normalize_returns: cfg.flag("normalize_returns")?,
        };
        reinforce_train(env, &mut policy, &rc, rng)?
    };
    let mut metrics = MetricLog::for_algo(cfg.algo);
    for r in &log.rows {
        metrics.push(r.episode as u64, &[r.episode_return, r.policy_entropy, r.value_loss])?;
    }
    let mut t = Trained::new(cfg.algo, policy.net.to_checkpoint()).note("recent_mean_return", log.recent_mean_return(10));
    if let Some(value) = value {
        t.extras.push(("value_checkpoint.txt", value.net.to_checkpoint()));
    }
    t.metrics = metrics;
    Ok(t)
}

fn selfplay_config(cfg: &ExperimentConfig) -> Result<SelfPlayConfig> {
    Ok(SelfPlayConfig {
        iterations: cfg.budget(),
        games_per_iteration: cfg.int("games")?,
        simulations: cfg.int("simulations")?,
        c_p: cfg.float("c_puct")?,
        root_noise: Some(Dirichlet {
            alpha: cfg.float("noise_alpha")?,
            epsilon: cfg.float("noise_epsilon")?,
        })
        .filter(|d| d.epsilon > 0.0),
        sampled_plies: cfg.int("sampled_plies")?,
        window: cfg.int("window")?,
        train_steps: cfg.int("train_steps")?,
        batch_size: cfg.int("batch")?,
        lr: cfg.float("lr")?,
        eval_games: 0,
    })
}

fn selfplay<G: Game>(cfg: &ExperimentConfig, game: &G, rng: &mut SeededRng) -> Result<Trained> {
    let net = DualHeadNet::for_game(game, &cfg.widths("hidden")?, rng)?;
    if cfg.budget == 0 {
        return Ok(Trained::new(cfg.algo, net.to_checkpoint()));
    }
    let run = self_play_train(game, net, &selfplay_config(cfg)?, rng)?;
    let mut log = MetricLog::for_algo(cfg.algo);
    for m in &run.metrics {
        log.push(
            m.iteration as u64,
            &[
                m.examples as f64,
                m.buffer as f64,
                m.policy_loss,
                m.value_loss,
                m.first_player_wins as f64,
                m.second_player_wins as f64,
                m.draws as f64,
            ],
        )?;
    }
    let mut t = Trained::new(cfg.algo, run.net.to_checkpoint());
    t.metrics = log;
    Ok(t)
}

fn cfr(cfg: &ExperimentConfig) -> Result<Trained> {
    if cfg.budget == 0 {
        let profile = StrategyProfile::uniform();
        return Ok(Trained::new(cfg.algo, profile.to_csv().render()).note("exploitability", exploitability(&profile)?));
    }
    let run = cfr_solve(cfg.budget(), cfg.int("trace_every")?)?;
    let mut log = MetricLog::for_algo(cfg.algo);
    for (it, e) in &run.trace {
        log.push(*it as u64, &[*e])?;
    }
    let mut t = Trained::new(cfg.algo, run.profile.to_csv().render())
        .note("exploitability", run.exploitability)
        .note("game_value", run.game_value);
    t.metrics = log;
    Ok(t)
}

fn maml_config(cfg: &ExperimentConfig) -> Result<MamlConfig> {
    Ok(MamlConfig {
        inner_lr: cfg.float("inner_lr")?,
        outer_lr: cfg.float("outer_lr")?,
        meta_batch: cfg.int("meta_batch")?,
        iterations: cfg.budget(),
        inner_steps: cfg.int("inner_steps")?,
        support: cfg.int("support")?,
        query: cfg.int("query")?,
    })
}

/// The linear regressor adapted by MAML.
pub fn maml_init(rng: &mut SeededRng) -> Result<Mlp> {
    Mlp::new(&[1, 1], &[Activation::Identity], InitScale::FanIn, rng)
}

fn maml(cfg: &ExperimentConfig, rng: &mut SeededRng) -> Result<Trained> {
    let init = maml_init(rng)?;
    let run = maml_train(&LinearFamily::default(), &init, &maml_config(cfg)?, rng)?;
    let mut log = MetricLog::for_algo(cfg.algo);
    for (i, l) in run.query_loss.iter().enumerate() {
        log.push(i as u64 + 1, &[*l])?;
    }
    let mut t = Trained::new(cfg.algo, run.net.to_checkpoint())
        .note("slope", run.net.weight(0, 0, 0))
        .note("intercept", run.net.params()[1]);
    t.metrics = log;
    Ok(t)
}

fn pbt<E: DiscreteEnv>(cfg: &ExperimentConfig, env: &E, starts: Vec<usize>, rng: &mut SeededRng) -> Result<Trained> {
    let setup = TabularSetup {
        env,
        gamma: cfg.float("gamma")?,
        epsilon: cfg.float("epsilon")?,
        max_episode_steps: cfg.int("max_episode_steps")?,
        eval_starts: starts,
        eval_max_steps: cfg.int("max_episode_steps")?,
    };
    if cfg.budget == 0 {
        return Ok(Trained::new(cfg.algo, setup.fresh().q.to_csv()));
    }
    let alphas = log_spaced(cfg.float("alpha_lo")?, cfg.float("alpha_hi")?, cfg.int("population")?);
    let pc = PbtConfig {
        segment_steps: cfg.int("segment")?,
        total_steps: cfg.budget(),
        exploit_fraction: cfg.float("fraction")?,
        ..PbtConfig::default()
    };
    let run = setup.pbt(&alphas, &pc, rng)?;
    let mut log = MetricLog::for_algo(cfg.algo);
    let mut steps: Vec<usize> = run.lineage.iter().map(|e| e.step).collect();
    steps.dedup();
    for step in steps {
        let trained: Vec<_> = run
            .lineage
            .iter()
            .filter(|e| e.step == step && e.event == crate::meta::PbtEvent::Train)
            .collect();
        let Some(best) = trained.iter().max_by(|a, b| a.score.total_cmp(&b.score).then(b.member.cmp(&a.member))) else {
            continue;
        };
        let mean = trained.iter().map(|e| e.score).sum::<f64>() / trained.len() as f64;
        log.push(step as u64, &[best.score, mean, best.hyper[0]])?;
    }
    let best = run.best_member();
    let mut t = Trained::new(cfg.algo, best.weights.q.to_csv())
        .note("best_score", best.score)
        .note("best_alpha", best.hyper[0]);
    t.extras.push(("lineage.csv", run.lineage_csv().render()));
    t.metrics = log;
    Ok(t)
}

/// Number of genes above one half.
pub fn one_max(genome: &[f64]) -> f64 {
    genome.iter().filter(|g| **g > 0.5).count() as f64
}

fn evolution(cfg: &ExperimentConfig, rng: &mut SeededRng) -> Result<Trained> {
    let ec = EvolveConfig {
        genome_len: cfg.int("genome_len")?,
        population: cfg.int("population")?,
        generations: cfg.budget(),
        mutation_sigma: cfg.float("sigma")?,
        crossover_rate: cfg.float("crossover")?,
        elites: cfg.int("elites")?,
        init_range: (0.0, 1.0),
    };
    let run = evolve(one_max, &ec, rng)?;
    let mut log = MetricLog::for_algo(cfg.algo);
    if cfg.budget > 0 {
        for (g, f) in run.best_per_generation.iter().enumerate() {
            log.push(g as u64, &[*f])?;
        }
    }
    let mut genome = CsvTable::new(&["gene", "value"]);
    for (i, v) in run.best.genome.iter().enumerate() {
        genome.push([i.to_string(), format!("{v:?}")]);
    }
    let mut t = Trained::new(cfg.algo, genome.render()).note("best_fitness", run.best.fitness.unwrap_or(f64::NAN));
    t.metrics = log;
    Ok(t)
}

fn read_checkpoint(cfg: &ExperimentConfig) -> Result<String> {
    let path = cfg.out.join(CHECKPOINT_FILE);
    fs::read_to_string(&path)
        .map_err(|e| RlError::Usage(format!("cannot read checkpoint {}: {e}; run training first", path.display())))
}

/// Evaluates the checkpoint a run left in `cfg.out` over `episodes`
/// episodes (games for self-play, tasks for MAML) and writes `eval.csv`.
pub fn evaluate(cfg: &ExperimentConfig, episodes: usize) -> Result<Vec<(String, f64)>> {
    if episodes == 0 {
        return Err(RlError::Usage("evaluation needs at least one episode".into()));
    }
    let text = read_checkpoint(cfg)?;
    let mut rng = seeded(cfg.seed);
    let rng = &mut rng;
    let mut out: Vec<(String, f64)> = Vec::new();
    let mut note = |k: &str, v: f64| out.push((k.to_string(), v));
    match cfg.algo {
        Algo::ValueIteration => {
            let values = ValueTable::from_csv(&text)?;
            let mdp = tabular_model(cfg.env, cfg.float("gamma")?);
            check_width(values.len(), mdp.num_states(), "value table")?;
            let q = q_from_values(&mdp, &values.values);
            note("bellman_residual", crate::tabular::bellman_residual(&mdp, &values.values));
            note("greedy_return", tabular_return(cfg.env, &q, rng)?);
        }
        Algo::QLearning | Algo::Sarsa | Algo::DynaQ | Algo::Pbt => {
            let q = QTable::from_csv(&text)?;
            let gamma = cfg.float("gamma")?;
            check_width(q.num_states(), tabular_model(cfg.env, gamma).num_states(), "Q table")?;
            note("oracle_agreement", tabular_agreement(cfg.env, gamma, &q)?);
            note("greedy_return", tabular_return(cfg.env, &q, rng)?);
        }
        Algo::Dqn => {
            let net = Mlp::from_checkpoint(&text)?;
            let max_steps = cfg.int("max_episode_steps")?;
            let mean = match cfg.env {
                EnvId::Taxi => q_net_return(&OneHot(Taxi::new()), &net, episodes, max_steps, rng)?,
                _ => q_net_return(&CartPole::new(), &net, episodes, max_steps, rng)?,
            };
            note("mean_return", mean);
        }
        Algo::Reinforce | Algo::ActorCritic => {
            let policy = PolicyNet {
                net: Mlp::from_checkpoint(&text)?,
            };
            let max_steps = cfg.int("max_steps")?;
            let mean = match cfg.env {
                EnvId::Bandit => policy_return(&pg_bandit(), &policy, episodes, max_steps, rng)?,
                _ => policy_return(&CartPole::new(), &policy, episodes, max_steps, rng)?,
            };
            note("mean_return", mean);
        }
        Algo::SelfPlay => {
            let net = DualHeadNet::from_checkpoint(&text)?;
            let sims = cfg.int("simulations")?;
            let c_p = cfg.float("c_puct")?;
            let (rate, tally) = match cfg.env {
                EnvId::Hex5 => vs_random(&Hex::new(5), net, sims, c_p, episodes, rng)?,
                _ => vs_random(&TicTacToe, net, sims, c_p, episodes, rng)?,
            };
            note("score_vs_random", rate);
            note("wins", tally.0);
            note("draws", tally.1);
            note("losses", tally.2);
        }
        Algo::Cfr => {
            let profile = StrategyProfile::from_csv(&text)?;
            note("exploitability", exploitability(&profile)?);
            note("game_value", expected_value(&profile)?);
        }
        Algo::Maml => {
            let net = Mlp::from_checkpoint(&text)?;
            check_width(net.input_width(), 1, "regressor input")?;
            let loss = post_adaptation_loss(&LinearFamily::default(), &net, &maml_config(cfg)?, episodes, rng)?;
            note("post_adaptation_loss", loss);
        }
        Algo::Evolve => {
            let genome = read_genome(&text)?;
            note("fitness", one_max(&genome));
        }
    }
    let mut table = CsvTable::new(&["metric", "value"]);
    for (k, v) in &out {
        table.push([k.clone(), format!("{v:?}")]);
    }
    table.save(cfg.out.join(EVAL_FILE))?;
    Ok(out)
}

fn check_width(got: usize, want: usize, what: &str) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(RlError::Usage(format!("{what} has {got} entries but the environment needs {want}")))
    }
}

fn tabular_return(env: EnvId, q: &QTable, rng: &mut SeededRng) -> Result<f64> {
    match env {
        EnvId::Taxi => evaluate_greedy(&Taxi::new(), q, &tabular_starts(env), 200, rng),
        _ => evaluate_greedy(&GridWorld::four_rooms(), q, &tabular_starts(env), 200, rng),
    }
}

fn q_net_return<E: VectorEnv>(env: &E, net: &Mlp, episodes: usize, max_steps: usize, rng: &mut SeededRng) -> Result<f64> {
    check_width(net.input_width(), env.observation_width(), "network input")?;
    check_width(net.output_width(), env.num_actions(), "network output")?;
    evaluate_q_net(env, net, episodes, max_steps, rng)
}

fn policy_return<E: VectorEnv>(
    env: &E,
    policy: &PolicyNet,
    episodes: usize,
    max_steps: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    check_width(policy.net.input_width(), env.observation_width(), "policy input")?;
    check_width(policy.num_actions(), env.num_actions(), "policy output")?;
    let mut total = 0.0;
    for _ in 0..episodes {
        total += run_episode(env, policy, max_steps, rng)?.total_reward();
    }
    Ok(total / episodes as f64)
}

/// Checks that `net` was built for `game`.
pub fn check_net_fits<G: Game>(game: &G, net: &DualHeadNet) -> Result<()> {
    let width = game.encode(&game.initial()).len();
    let input = net.trunk.input_width();
    if input != width || net.num_moves() != game.num_moves() {
        return Err(RlError::Usage(format!(
            "checkpoint expects {input} inputs and {} moves; {} has {width} and {}",
            net.num_moves(),
            game.name(),
            game.num_moves()
        )));
    }
    Ok(())
}

fn vs_random<G: Game>(
    game: &G,
    net: DualHeadNet,
    sims: usize,
    c_p: f64,
    games: usize,
    rng: &mut SeededRng,
) -> Result<(f64, (f64, f64, f64))> {
    check_net_fits(game, &net)?;
    let mut agent = MctsAgent::with_net("net", MctsConfig::new(sims, Selection::Puct { c_p }), net);
    let games = games + games % 2;
    let result = play_match(game, &mut agent, &mut RandomAgent, games, 0, rng)?;
    let t = result.total();
    Ok((result.score_rate(), (t.wins as f64, t.draws as f64, t.losses as f64)))
}

fn read_genome(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .nth(1)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| RlError::Parse(format!("bad genome row {l:?}")))
        })
        .collect()
}

/// Loads the resolved config a run wrote into `dir`.
pub fn load_run(dir: impl AsRef<Path>) -> Result<ExperimentConfig> {
    ExperimentConfig::load(dir.as_ref().join(CONFIG_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(algo: Algo, dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(algo);
        cfg.out = dir.join(algo.id());
        cfg.budget = match algo {
            Algo::ValueIteration => 1000,
            Algo::QLearning | Algo::Sarsa => 50,
            Algo::DynaQ => 5,
            Algo::Dqn => 1500,
            Algo::Reinforce | Algo::ActorCritic => 5,
            Algo::SelfPlay => 1,
            Algo::Cfr => 50,
            Algo::Maml => 20,
            Algo::Pbt => 2000,
            Algo::Evolve => 3,
        };
        match algo {
            Algo::Dqn => {
                cfg.set("hidden", "8").unwrap();
                cfg.set("max_episode_steps", "100").unwrap();
            }
            Algo::SelfPlay => {
                cfg.set("games", "2").unwrap();
                cfg.set("simulations", "8").unwrap();
                cfg.set("train_steps", "2").unwrap();
            }
            Algo::Pbt => cfg.set("segment", "500").unwrap(),
            Algo::Cfr => cfg.set("trace_every", "10").unwrap(),
            _ => {}
        }
        cfg
    }

    #[test]
    fn every_algo_writes_its_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        for algo in Algo::ALL {
            let cfg = quick(algo, dir.path());
            let outcome = run_experiment(&cfg).unwrap();
            assert!(!outcome.metrics.is_empty(), "{algo}");
            let csv = fs::read_to_string(cfg.out.join(METRICS_FILE)).unwrap();
            let header = csv.lines().next().unwrap();
            assert_eq!(header, super::super::metrics_header(algo).join(","), "{algo}");
            assert_eq!(load_run(&cfg.out).unwrap(), cfg);
            let eval = evaluate(&cfg, 2).unwrap();
            assert!(!eval.is_empty() && eval.iter().all(|(_, v)| v.is_finite()), "{algo}: {eval:?}");
        }
    }

    #[test]
    fn zero_budget_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        for algo in Algo::ALL {
            let mut cfg = quick(algo, dir.path());
            cfg.budget = 0;
            run_experiment(&cfg).unwrap();
            let csv = fs::read_to_string(cfg.out.join(METRICS_FILE)).unwrap();
            assert_eq!(csv.lines().count(), 1, "{algo}");
            assert!(cfg.out.join(CHECKPOINT_FILE).exists());
        }
    }

    #[test]
    fn mismatched_checkpoint_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick(Algo::SelfPlay, dir.path());
        run_experiment(&cfg).unwrap();
        let hex = cfg.clone().with_env(EnvId::Hex5).unwrap();
        assert!(matches!(evaluate(&hex, 2), Err(RlError::Usage(_))));
        let missing = ExperimentConfig {
            out: dir.path().join("nowhere"),
            ..cfg
        };
        assert!(matches!(evaluate(&missing, 2), Err(RlError::Usage(_))));
    }
}
