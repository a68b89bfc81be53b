//! Round-robin tournaments between board-game agents.
//!
//! ```text
//! [tournament]
//! game = tictactoe
//! games = 20
//! opening_plies = 0
//! seed = 1
//! out = runs/tournament
//!
//! [agents]
//! perfect = minimax
//! search = mcts 2000
//! trained = net runs/selfplay/checkpoint.txt 200
//! noise = random
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use super::run::check_net_fits;
use crate::envs::{Game, Hex, TicTacToe};
use crate::error::{Result, RlError};
use crate::io::{write_atomic, CsvTable};
use crate::rng::{derive_seed, seeded};
use crate::search::{
    play_match, Agent, DualHeadNet, MatchResult, MctsAgent, MctsConfig, MinimaxAgent, RandomAgent, Selection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameId {
    TicTacToe,
    Hex5,
}

impl GameId {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "tictactoe" => Ok(GameId::TicTacToe),
            "hex5" => Ok(GameId::Hex5),
            _ => Err(RlError::Usage(format!("unknown game {s:?}; expected tictactoe or hex5"))),
        }
    }

    fn id(self) -> &'static str {
        match self {
            GameId::TicTacToe => "tictactoe",
            GameId::Hex5 => "hex5",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentSpec {
    Random,
    Minimax,
    /// UCT search with random playouts.
    Mcts { simulations: usize },
    /// P-UCT search guided by a self-play checkpoint.
    Net { checkpoint: PathBuf, simulations: usize },
}

impl AgentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let sims = |w: &str| {
            w.parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| RlError::Parse(format!("{w:?} is not a positive simulation count")))
        };
        match words[..] {
            ["random"] => Ok(AgentSpec::Random),
            ["minimax"] => Ok(AgentSpec::Minimax),
            ["mcts", n] => Ok(AgentSpec::Mcts { simulations: sims(n)? }),
            ["net", path, n] => Ok(AgentSpec::Net {
                checkpoint: PathBuf::from(path),
                simulations: sims(n)?,
            }),
            _ => Err(RlError::Parse(format!(
                "agent {text:?}; expected `random`, `minimax`, `mcts N` or `net PATH N`"
            ))),
        }
    }

    fn render(&self) -> String {
        match self {
            AgentSpec::Random => "random".into(),
            AgentSpec::Minimax => "minimax".into(),
            AgentSpec::Mcts { simulations } => format!("mcts {simulations}"),
            AgentSpec::Net { checkpoint, simulations } => format!("net {} {simulations}", checkpoint.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentConfig {
    pub game: GameId,
    /// Games per pairing; even, so each agent moves first equally often.
    pub games: usize,
    pub opening_plies: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// In listing order.
    pub agents: Vec<(String, AgentSpec)>,
}

impl TournamentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TournamentConfig {
            game: GameId::TicTacToe,
            games: 20,
            opening_plies: 0,
            seed: 0,
            out: PathBuf::from("runs/tournament"),
            agents: Vec::new(),
        };
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| RlError::Parse(format!("line {}: {msg}", n + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if section != "tournament" && section != "agents" {
                    return Err(at(format!("unknown section [{section}]")));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| at("expected `key = value`".into()))?;
            let number = |v: &str| v.parse::<u64>().map_err(|_| at(format!("{key} = {v:?} is not an integer")));
            match (section.as_str(), key) {
                ("tournament", "game") => cfg.game = GameId::parse(value)?,
                ("tournament", "games") => cfg.games = number(value)? as usize,
                ("tournament", "opening_plies") => cfg.opening_plies = number(value)? as usize,
                ("tournament", "seed") => cfg.seed = number(value)?,
                ("tournament", "out") => cfg.out = PathBuf::from(value),
                ("agents", name) => {
                    if cfg.agents.iter().any(|(a, _)| a == name) {
                        return Err(at(format!("agent {name:?} listed twice")));
                    }
                    cfg.agents.push((name.to_string(), AgentSpec::parse(value).map_err(|e| at(e.to_string()))?));
                }
                _ => return Err(at(format!("unknown key {key:?}"))),
            }
        }
        Ok(cfg)
    }

    /// An unreadable file is a usage error, like a malformed one.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| RlError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "[tournament]\ngame = {}\ngames = {}\nopening_plies = {}\nseed = {}\nout = {}\n\n[agents]\n",
            self.game.id(),
            self.games,
            self.opening_plies,
            self.seed,
            self.out.display()
        );
        for (name, spec) in &self.agents {
            out.push_str(&format!("{name} = {}\n", spec.render()));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TournamentResult {
    pub names: Vec<String>,
    /// `(i, j, result of i against j)` for every `i < j`.
    pub pairings: Vec<(usize, usize, MatchResult)>,
}

impl TournamentResult {
    /// `(wins, draws, losses)` of agent `i` against agent `j`.
    pub fn record(&self, i: usize, j: usize) -> Option<(usize, usize, usize)> {
        self.pairings.iter().find_map(|(a, b, r)| {
            let t = r.total();
            if (*a, *b) == (i, j) {
                Some((t.wins, t.draws, t.losses))
            } else if (*a, *b) == (j, i) {
                Some((t.losses, t.draws, t.wins))
            } else {
                None
            }
        })
    }

    /// Points of the row agent against each column agent (win 1, draw
    /// 1/2), then its total wins, draws and losses.
    pub fn matrix_csv(&self) -> CsvTable {
        let mut header = vec!["agent"];
        header.extend(self.names.iter().map(String::as_str));
        header.extend(["wins", "draws", "losses"]);
        let mut t = CsvTable::new(&header);
        for (i, name) in self.names.iter().enumerate() {
            let mut row = vec![name.clone()];
            let mut total = (0, 0, 0);
            for j in 0..self.names.len() {
                match self.record(i, j) {
                    Some((w, d, l)) if i != j => {
                        row.push(format!("{}", w as f64 + 0.5 * d as f64));
                        total = (total.0 + w, total.1 + d, total.2 + l);
                    }
                    _ => row.push(String::new()),
                }
            }
            row.extend([total.0.to_string(), total.1.to_string(), total.2.to_string()]);
            t.push(row);
        }
        t
    }

    /// One row per agent and opponent, split by who moved first.
    pub fn pairings_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["agent", "opponent", "seat", "wins", "draws", "losses"]);
        for (a, b, r) in &self.pairings {
            for (seat, tally) in [("first", r.moving_first), ("second", r.moving_second)] {
                t.push([
                    self.names[*a].clone(),
                    self.names[*b].clone(),
                    seat.to_string(),
                    tally.wins.to_string(),
                    tally.draws.to_string(),
                    tally.losses.to_string(),
                ]);
            }
        }
        t
    }
}

fn build_agent<G: Game + Clone + 'static>(game: &G, name: &str, spec: &AgentSpec) -> Result<Box<dyn Agent<G>>> {
    Ok(match spec {
        AgentSpec::Random => Box::new(RandomAgent),
        AgentSpec::Minimax => {
            if game.num_moves() > 9 {
                return Err(RlError::Usage(format!(
                    "{name}: exhaustive minimax is only available on tic-tac-toe"
                )));
            }
            Box::new(MinimaxAgent::new(game.clone()))
        }
        AgentSpec::Mcts { simulations } => {
            Box::new(MctsAgent::playouts(name, MctsConfig::new(*simulations, Selection::uct())))
        }
        AgentSpec::Net { checkpoint, simulations } => {
            let text = fs::read_to_string(checkpoint)
                .map_err(|e| RlError::Usage(format!("{name}: cannot read {}: {e}", checkpoint.display())))?;
            let net = DualHeadNet::from_checkpoint(&text)?;
            check_net_fits(game, &net).map_err(|e| RlError::Usage(format!("{name}: {e}")))?;
            Box::new(MctsAgent::with_net(name, MctsConfig::new(*simulations, Selection::puct()), net))
        }
    })
}

fn play_round_robin<G: Game + Clone + 'static>(game: &G, cfg: &TournamentConfig) -> Result<TournamentResult> {
    let mut agents = cfg
        .agents
        .iter()
        .map(|(name, spec)| build_agent(game, name, spec))
        .collect::<Result<Vec<_>>>()?;
    let n = agents.len();
    let mut pairings = Vec::new();
    let mut index = 0;
    for i in 0..n {
        for j in i + 1..n {
            let (left, right) = agents.split_at_mut(j);
            let mut rng = seeded(derive_seed(cfg.seed, index));
            index += 1;
            let result = play_match(
                game,
                left[i].as_mut(),
                right[0].as_mut(),
                cfg.games,
                cfg.opening_plies,
                &mut rng,
            )?;
            pairings.push((i, j, result));
        }
    }
    Ok(TournamentResult {
        names: cfg.agents.iter().map(|(n, _)| n.clone()).collect(),
        pairings,
    })
}

/// Plays every pairing and writes `matrix.csv` and `pairings.csv` to `cfg.out`.
pub fn tournament(cfg: &TournamentConfig) -> Result<TournamentResult> {
    if cfg.agents.len() < 2 {
        return Err(RlError::Usage("a tournament needs at least two agents".into()));
    }
    if cfg.games == 0 || cfg.games % 2 != 0 {
        return Err(RlError::Usage(format!(
            "games per pairing must be positive and even, got {}",
            cfg.games
        )));
    }
    let result = match cfg.game {
        GameId::TicTacToe => play_round_robin(&TicTacToe, cfg)?,
        GameId::Hex5 => play_round_robin(&Hex::new(5), cfg)?,
    };
    fs::create_dir_all(&cfg.out)?;
    write_atomic(cfg.out.join("matrix.csv"), &result.matrix_csv().render())?;
    write_atomic(cfg.out.join("pairings.csv"), &result.pairings_csv().render())?;
    Ok(result)
}
