//! Command-line front end: `rlk solve|train|eval|tournament|reproduce`.
//!
//! Exit status is 0 on success, 1 when a run fails or an acceptance check
//! does not pass, and 2 for bad usage (flags, configs, missing checkpoints).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rl_kernel::error::RlError;
use rl_kernel::harness::{
    determinism_against, evaluate, load_run, reproduce_to, run_experiment, tournament, Algo, EnvId,
    ExperimentConfig, TournamentConfig, CRITERIA,
};

#[derive(Parser)]
#[command(name = "rlk", version, about = "Seeded reinforcement-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment config file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iterations, episodes, steps or games, depending on the command.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// Algorithm id; may instead come from `--config`.
    algo: Option<Algo>,
    #[arg(long)]
    env: Option<EnvId>,
    /// Hyperparameter override, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Run an exact solver (value-iteration, cfr).
    Solve(RunArgs),
    /// Train a learning algorithm.
    Train(RunArgs),
    /// Evaluate the checkpoint in a run directory (`--out`, or the config's).
    Eval {
        /// Episodes, games or tasks to evaluate over (default 100).
        #[arg(long)]
        episodes: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Round-robin between agents listed in a tournament config.
    Tournament {
        #[command(flatten)]
        common: Common,
    },
    /// Run acceptance criteria (`A0`..`A11`, or `all`).
    Reproduce {
        #[arg(default_value = "all")]
        criterion: String,
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Usage(String),
    Run(String),
    Unmet,
}

impl From<RlError> for Failure {
    fn from(e: RlError) -> Self {
        match e {
            RlError::Usage(_) | RlError::Parse(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Unmet) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("rlk: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("rlk: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve(args) => run(args, true),
        Command::Train(args) => run(args, false),
        Command::Eval { episodes, common } => eval(episodes, common),
        Command::Tournament { common } => run_tournament(common),
        Command::Reproduce { criterion, common } => run_reproduce(&criterion, common),
    }
}

fn experiment(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&args.common.config, args.algo) {
        (Some(path), algo) => {
            let cfg = ExperimentConfig::load(path)?;
            if algo.is_some_and(|a| a != cfg.algo) {
                return Err(Failure::Usage(format!("{} configures {}, not {}", path.display(), cfg.algo, algo.unwrap())));
            }
            cfg
        }
        (None, Some(algo)) => ExperimentConfig::new(algo),
        (None, None) => return Err(Failure::Usage("name an algorithm or pass --config".into())),
    };
    if let Some(env) = args.env {
        cfg = cfg.with_env(env)?;
    }
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects key=value, got {o:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    apply(&mut cfg, &args.common);
    Ok(cfg)
}

fn apply(cfg: &mut ExperimentConfig, common: &Common) {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(budget) = common.budget {
        cfg.budget = budget;
    }
}

fn run(args: RunArgs, solving: bool) -> Result<(), Failure> {
    let cfg = experiment(&args)?;
    if cfg.algo.is_solver() != solving {
        let (this, other) = if solving { ("solve", "train") } else { ("train", "solve") };
        return Err(Failure::Usage(format!("{} is not a `{this}` algorithm; use `rlk {other}`", cfg.algo)));
    }
    let outcome = run_experiment(&cfg)?;
    println!(
        "{} on {}: {} {} (seed {}), {} metric rows",
        cfg.algo,
        cfg.env,
        cfg.budget,
        cfg.algo.budget_unit(),
        cfg.seed,
        outcome.metrics.len()
    );
    for (k, v) in &outcome.summary {
        println!("  {k} = {v}");
    }
    for f in &outcome.files {
        println!("  wrote {}", f.display());
    }
    Ok(())
}

fn eval(episodes: Option<usize>, common: Common) -> Result<(), Failure> {
    if common.budget.is_some() {
        return Err(Failure::Usage("eval takes --episodes, not --budget".into()));
    }
    let mut cfg = match (&common.config, &common.out) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(dir)) => load_run(dir)?,
        (None, None) => return Err(Failure::Usage("eval needs --out RUN_DIR or --config".into())),
    };
    apply(&mut cfg, &common);
    let results = evaluate(&cfg, episodes.unwrap_or(rl_kernel::harness::run::DEFAULT_EVAL_EPISODES))?;
    println!("{} checkpoint in {}:", cfg.algo, cfg.out.display());
    for (k, v) in results {
        println!("  {k} = {v}");
    }
    Ok(())
}

fn run_tournament(common: Common) -> Result<(), Failure> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage("tournament needs --config".into()))?;
    let mut cfg = TournamentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(games) = common.budget {
        cfg.games = games as usize;
    }
    let result = tournament(&cfg)?;
    print!("{}", result.matrix_csv().render());
    println!("wrote {}", cfg.out.display());
    Ok(())
}

fn run_reproduce(criterion: &str, common: Common) -> Result<(), Failure> {
    if common.config.is_some() || common.budget.is_some() {
        return Err(Failure::Usage("reproduce takes only --seed and --out".into()));
    }
    let ids: Vec<&str> = if criterion.eq_ignore_ascii_case("all") {
        CRITERIA.to_vec()
    } else {
        vec![criterion]
    };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.contains(id)) {
        return Err(Failure::Usage(format!("unknown criterion {bad:?}; valid ids: {}, all", CRITERIA.join(", "))));
    }
    let seed = common.seed.unwrap_or(0);
    let out = common.out.unwrap_or_else(|| PathBuf::from("runs/reproduce"));
    std::fs::create_dir_all(&out).map_err(RlError::from)?;
    let mut all_passed = true;
    let mut first: Vec<(String, String)> = Vec::new();
    for id in ids {
        let report = if id == "A11" && !first.is_empty() {
            let r = determinism_against(seed, &first)?;
            rl_kernel::io::write_atomic(out.join("A11.csv"), &r.metrics.render())?;
            rl_kernel::io::write_atomic(out.join("A11.txt"), &format!("{r}\n"))?;
            r
        } else {
            reproduce_to(id, seed, &out)?
        };
        first.push((report.id.clone(), report.metrics.render()));
        println!("{report}");
        all_passed &= report.passed;
    }
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Unmet)
    }
}
