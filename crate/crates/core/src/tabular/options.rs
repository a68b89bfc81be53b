//! Temporally extended actions on grid worlds and SMDP Q-learning over them.

use std::collections::VecDeque;

use rand::Rng;

use super::{QTable, TieBreak};
use crate::envs::grid::{NUM_ACTIONS, UP};
use crate::envs::{DiscreteEnv, Environment, GridWorld, Tile};
use crate::error::{contract, invalid, Result};
use crate::rng::SeededRng;

/// An option: where it may start, what it does, and when it stops.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOption {
    pub name: String,
    pub initiation: Vec<bool>,
    /// Action per state; `None` where the option never acts.
    pub policy: Vec<Option<usize>>,
    /// Probability of stopping on arrival in each state.
    pub termination: Vec<f64>,
    /// The state the option is built to reach, if any.
    pub subgoal: Option<usize>,
}

impl GridOption {
    pub fn can_start(&self, s: usize) -> bool {
        self.initiation[s]
    }
}

/// Two options per room, each driving along a shortest path to one of the
/// room's hallways. An option may start in its room or in the room's other
/// hallways, and stops at its target hallway or on leaving that region.
pub fn hallway_options(grid: &GridWorld) -> Vec<GridOption> {
    let n = grid.num_states();
    let rooms = grid.rooms();
    let hallways = grid.states_with(Tile::Hallway);
    let num_rooms = rooms.iter().flatten().max().map_or(0, |m| m + 1);
    let mut options = Vec::new();
    for room in 0..num_rooms {
        let room_halls: Vec<usize> = hallways
            .iter()
            .copied()
            .filter(|h| grid.hallway_rooms(*h).contains(&room))
            .collect();
        for &target in &room_halls {
            let region: Vec<bool> = (0..n)
                .map(|s| rooms[s] == Some(room) || room_halls.contains(&s))
                .collect();
            let initiation: Vec<bool> = (0..n)
                .map(|s| region[s] && s != target && !grid.is_terminal(&s))
                .collect();
            let policy = shortest_path_policy(grid, &region, target);
            let termination = (0..n)
                .map(|s| if initiation[s] { 0.0 } else { 1.0 })
                .collect();
            let (r, c) = grid.position(target);
            options.push(GridOption {
                name: format!("room{room}->hall({r},{c})"),
                initiation,
                policy: (0..n).map(|s| if s == target { None } else { policy[s] }).collect(),
                termination,
                subgoal: Some(target),
            });
        }
    }
    options
}

/// First action of a shortest path to `target` staying inside `region`.
fn shortest_path_policy(grid: &GridWorld, region: &[bool], target: usize) -> Vec<Option<usize>> {
    let n = grid.num_states();
    let mut dist = vec![usize::MAX; n];
    dist[target] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(u) = queue.pop_front() {
        for v in grid.neighbors(u) {
            if region[v] && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (0..n)
        .map(|s| {
            if !region[s] || dist[s] == usize::MAX || s == target {
                return None;
            }
            (UP..NUM_ACTIONS).find(|a| {
                let (next, _, _) = grid.transition(s, *a);
                next != s && region[next] && dist[next] + 1 == dist[s]
            })
        })
        .collect()
}

/// What running one choice (primitive or option) to completion produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceOutcome {
    pub next: usize,
    /// Discounted reward accumulated inside the choice.
    pub reward: f64,
    /// Primitive steps taken.
    pub duration: usize,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionsConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub episodes: usize,
    /// Primitive-step cap per episode.
    pub max_steps: usize,
    pub ties: TieBreak,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            gamma: 0.9,
            epsilon: 0.1,
            episodes: 500,
            max_steps: 1000,
            ties: TieBreak::Lowest,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmdpRun {
    /// Columns: the four primitives, then the options in order.
    pub q: QTable,
    pub decisions: usize,
    pub steps: usize,
    pub episodes: usize,
}

/// Choices available in `s`: every primitive plus each option whose
/// initiation set contains `s`.
pub fn legal_choices(options: &[GridOption], s: usize) -> Vec<usize> {
    (0..NUM_ACTIONS)
        .chain(
            options
                .iter()
                .enumerate()
                .filter(|(_, o)| o.can_start(s))
                .map(|(i, _)| NUM_ACTIONS + i),
        )
        .collect()
}

/// Runs choice `choice` from `s` until it terminates, the episode ends or
/// `step_budget` primitive steps are used.
pub fn execute_choice(
    grid: &GridWorld,
    options: &[GridOption],
    s: usize,
    choice: usize,
    gamma: f64,
    step_budget: usize,
    rng: &mut SeededRng,
) -> Result<ChoiceOutcome> {
    if choice < NUM_ACTIONS {
        let (next, reward, terminal) = grid.transition(s, choice);
        return Ok(ChoiceOutcome {
            next,
            reward,
            duration: 1,
            terminal,
        });
    }
    let option = options
        .get(choice - NUM_ACTIONS)
        .ok_or_else(|| crate::RlError::InvalidInput(format!("no choice {choice}")))?;
    if !option.can_start(s) {
        return contract(format!("option {} started outside its initiation set", option.name));
    }
    let mut state = s;
    let mut reward = 0.0;
    let mut discount = 1.0;
    let mut duration = 0;
    loop {
        let Some(a) = option.policy[state] else {
            return contract(format!("option {} has no action in state {state}", option.name));
        };
        let (next, r, terminal) = grid.transition(state, a);
        reward += discount * r;
        discount *= gamma;
        duration += 1;
        state = next;
        if terminal || duration >= step_budget {
            return Ok(ChoiceOutcome {
                next,
                reward,
                duration,
                terminal,
            });
        }
        let beta = option.termination[state];
        if beta >= 1.0 || (beta > 0.0 && rng.random::<f64>() < beta) {
            return Ok(ChoiceOutcome {
                next,
                reward,
                duration,
                terminal,
            });
        }
    }
}

fn choose(q: &QTable, legal: &[usize], s: usize, cfg: &OptionsConfig, rng: &mut SeededRng) -> usize {
    if cfg.epsilon > 0.0 && rng.random::<f64>() < cfg.epsilon {
        return legal[rng.random_range(0..legal.len())];
    }
    match cfg.ties {
        TieBreak::Lowest => greedy_choice(q, legal, s),
        TieBreak::Random => {
            let best = max_of(q, legal, s);
            let tied: Vec<usize> = legal.iter().copied().filter(|c| q.get(s, *c) == best).collect();
            tied[rng.random_range(0..tied.len())]
        }
    }
}

fn max_of(q: &QTable, legal: &[usize], s: usize) -> f64 {
    legal.iter().map(|c| q.get(s, *c)).fold(f64::NEG_INFINITY, f64::max)
}

fn greedy_choice(q: &QTable, legal: &[usize], s: usize) -> usize {
    let mut best = legal[0];
    for &c in &legal[1..] {
        if q.get(s, c) > q.get(s, best) {
            best = c;
        }
    }
    best
}

fn max_legal(q: &QTable, options: &[GridOption], s: usize) -> f64 {
    max_of(q, &legal_choices(options, s), s)
}

pub fn smdp_q_over_options(
    grid: &GridWorld,
    options: &[GridOption],
    cfg: &OptionsConfig,
    rng: &mut SeededRng,
) -> Result<SmdpRun> {
    smdp_q_over_options_observed(grid, options, cfg, rng, |_| true)
}

/// SMDP Q-learning: after a choice lasting `k` steps with discounted reward
/// `R`, `Q(s,c) += alpha [R + gamma^k max Q(s',.) - Q(s,c)]`.
/// `after_episode` sees the run so far and may stop training early.
pub fn smdp_q_over_options_observed<F: FnMut(&SmdpRun) -> bool>(
    grid: &GridWorld,
    options: &[GridOption],
    cfg: &OptionsConfig,
    rng: &mut SeededRng,
    mut after_episode: F,
) -> Result<SmdpRun> {
    if !(cfg.alpha > 0.0 && cfg.alpha <= 1.0) || !(0.0..=1.0).contains(&cfg.gamma) {
        return invalid("alpha must be in (0, 1] and gamma in [0, 1]");
    }
    let n = grid.num_states();
    if options.iter().any(|o| o.initiation.len() != n) {
        return invalid("option tables do not match the grid");
    }
    let mut run = SmdpRun {
        q: QTable::zeros(n, NUM_ACTIONS + options.len()),
        decisions: 0,
        steps: 0,
        episodes: 0,
    };
    for _ in 0..cfg.episodes {
        let mut s = grid.reset(rng).state;
        let mut used = 0;
        while !grid.is_terminal(&s) && used < cfg.max_steps {
            let legal = legal_choices(options, s);
            let c = choose(&run.q, &legal, s, cfg, rng);
            let out = execute_choice(grid, options, s, c, cfg.gamma, cfg.max_steps - used, rng)?;
            let bootstrap = if out.terminal {
                0.0
            } else {
                cfg.gamma.powi(out.duration as i32) * max_legal(&run.q, options, out.next)
            };
            let old = run.q.get(s, c);
            run.q.set(s, c, old + cfg.alpha * (out.reward + bootstrap - old));
            run.decisions += 1;
            used += out.duration;
            s = out.next;
        }
        run.steps += used;
        run.episodes += 1;
        if !after_episode(&run) {
            break;
        }
    }
    Ok(run)
}

/// Fraction of `starts` from which the greedy choice policy reaches a goal
/// cell within `max_steps` primitive steps.
pub fn greedy_success_rate(
    grid: &GridWorld,
    options: &[GridOption],
    q: &QTable,
    starts: &[usize],
    max_steps: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    if starts.is_empty() {
        return invalid("no start states");
    }
    let mut successes = 0;
    for &start in starts {
        let mut s = start;
        let mut used = 0;
        while !grid.is_terminal(&s) && used < max_steps {
            let c = greedy_choice(q, &legal_choices(options, s), s);
            let out = execute_choice(grid, options, s, c, 1.0, max_steps - used, rng)?;
            used += out.duration;
            s = out.next;
        }
        if grid.tile(s) == Tile::Goal {
            successes += 1;
        }
    }
    Ok(successes as f64 / starts.len() as f64)
}
