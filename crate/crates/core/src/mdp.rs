//! Finite Markov decision processes, trajectories and returns.

use crate::dist::{Categorical, MASS_TOLERANCE};
use crate::error::{invalid, Result};

/// One possible outcome of taking an action: `(next_state, probability, reward)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

/// A finite MDP with dense integer states and actions.
///
/// Transitions are stored sparsely per `(state, action)`; the reward table is
/// carried by each outcome, so `R(s, a, s')` is the reward on the outcome
/// leading to `s'`. Terminal states self-loop with reward 0 on every action.
#[derive(Debug, Clone)]
pub struct Mdp {
    num_states: usize,
    num_actions: usize,
    outcomes: Vec<Vec<Outcome>>,
    terminal: Vec<bool>,
    gamma: f64,
    episodic: bool,
    initial: Categorical,
}

impl Mdp {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_episodic(&self) -> bool {
        self.episodic
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn initial(&self) -> &Categorical {
        &self.initial
    }

    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.outcomes[s * self.num_actions + a]
    }

    /// Dense next-state distribution for `(s, a)`.
    pub fn transition(&self, s: usize, a: usize) -> Categorical {
        let mut probs = vec![0.0; self.num_states];
        for o in self.outcomes(s, a) {
            probs[o.next] += o.prob;
        }
        Categorical::new(probs).expect("validated at build time")
    }

    /// `R(s, a, s')`; zero for next states that cannot occur.
    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.outcomes(s, a)
            .iter()
            .find(|o| o.next == next)
            .map_or(0.0, |o| o.reward)
    }

    /// Expected immediate reward plus discounted successor value.
    pub fn backup(&self, values: &[f64], s: usize, a: usize) -> f64 {
        self.outcomes(s, a)
            .iter()
            .map(|o| o.prob * (o.reward + self.gamma * values[o.next]))
            .sum()
    }

    /// Whether every `(s, a)` row has exactly one successor.
    pub fn is_deterministic(&self) -> bool {
        self.outcomes.iter().all(|row| row.len() == 1)
    }

    /// States reachable from the support of the initial distribution.
    pub fn reachable_states(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        let mut stack: Vec<usize> = (0..self.num_states)
            .filter(|s| self.initial.probs()[*s] > 0.0)
            .collect();
        for s in &stack {
            seen[*s] = true;
        }
        while let Some(s) = stack.pop() {
            for a in 0..self.num_actions {
                for o in self.outcomes(s, a) {
                    if o.prob > 0.0 && !seen[o.next] {
                        seen[o.next] = true;
                        stack.push(o.next);
                    }
                }
            }
        }
        seen
    }
}

/// Incremental constructor for [`Mdp`]; `build` validates every invariant.
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    num_states: usize,
    num_actions: usize,
    outcomes: Vec<Vec<Outcome>>,
    terminal: Vec<bool>,
    gamma: f64,
    episodic: bool,
    initial: Option<Categorical>,
}

impl MdpBuilder {
    pub fn new(num_states: usize, num_actions: usize, gamma: f64) -> Self {
        Self {
            num_states,
            num_actions,
            outcomes: vec![Vec::new(); num_states * num_actions],
            terminal: vec![false; num_states],
            gamma,
            episodic: false,
            initial: None,
        }
    }

    pub fn episodic(mut self, episodic: bool) -> Self {
        self.episodic = episodic;
        self
    }

    pub fn initial(mut self, initial: Categorical) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn set_terminal(&mut self, s: usize) {
        self.terminal[s] = true;
    }

    pub fn set_outcomes(&mut self, s: usize, a: usize, outcomes: Vec<Outcome>) {
        self.outcomes[s * self.num_actions + a] = outcomes;
    }

    pub fn set_deterministic(&mut self, s: usize, a: usize, next: usize, reward: f64) {
        self.set_outcomes(
            s,
            a,
            vec![Outcome {
                next,
                prob: 1.0,
                reward,
            }],
        );
    }

    pub fn build(mut self) -> Result<Mdp> {
        if self.num_states == 0 || self.num_actions == 0 {
            return invalid("an MDP needs at least one state and one action");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return invalid(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if self.gamma == 1.0 && !self.episodic {
            return invalid("gamma = 1 requires an episodic MDP");
        }
        for s in 0..self.num_states {
            if self.terminal[s] {
                for a in 0..self.num_actions {
                    self.outcomes[s * self.num_actions + a] = vec![Outcome {
                        next: s,
                        prob: 1.0,
                        reward: 0.0,
                    }];
                }
                continue;
            }
            for a in 0..self.num_actions {
                let row = &self.outcomes[s * self.num_actions + a];
                if row.is_empty() {
                    return invalid(format!("no transition for state {s}, action {a}"));
                }
                let mut total = 0.0;
                for o in row {
                    if o.next >= self.num_states {
                        return invalid(format!("state {s}, action {a} leads to unknown state {}", o.next));
                    }
                    if !(o.prob >= 0.0) || !o.reward.is_finite() {
                        return invalid(format!("bad outcome {o:?} at state {s}, action {a}"));
                    }
                    total += o.prob;
                }
                if (total - 1.0).abs() > MASS_TOLERANCE {
                    return invalid(format!(
                        "transition probabilities for state {s}, action {a} sum to {total}"
                    ));
                }
            }
        }
        let initial = match self.initial {
            Some(init) if init.len() == self.num_states => init,
            Some(init) => {
                return invalid(format!(
                    "initial distribution over {} states, MDP has {}",
                    init.len(),
                    self.num_states
                ))
            }
            None => Categorical::one_hot(self.num_states, 0),
        };
        Ok(Mdp {
            num_states: self.num_states,
            num_actions: self.num_actions,
            outcomes: self.outcomes,
            terminal: self.terminal,
            gamma: self.gamma,
            episodic: self.episodic,
            initial,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub terminal: bool,
}

/// An ordered record of an agent's interaction; step `t` is `steps[t]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    steps: Vec<Step>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_steps(steps: Vec<Step>) -> Result<Self> {
        let mut traj = Self::new();
        for step in steps {
            traj.push(step)?;
        }
        Ok(traj)
    }

    /// Appends a step, enforcing continuity and that nothing follows a terminal step.
    pub fn push(&mut self, step: Step) -> Result<()> {
        if let Some(last) = self.steps.last() {
            if last.terminal {
                return invalid("cannot extend a trajectory past its terminal step");
            }
            if last.next_state != step.state {
                return invalid(format!(
                    "step {} starts in state {} but the previous step ended in {}",
                    self.steps.len(),
                    step.state,
                    last.next_state
                ));
            }
        }
        self.steps.push(step);
        Ok(())
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.reward)
    }
}

/// Discounted return `sum_i gamma^i r_i` from the trajectory's first step.
pub fn compute_return(traj: &Trajectory, gamma: f64) -> Result<f64> {
    let rewards: Vec<f64> = traj.rewards().collect();
    discounted_return(&rewards, gamma)
}

pub fn discounted_return(rewards: &[f64], gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return invalid(format!("gamma {gamma} outside [0, 1]"));
    }
    if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
        return invalid(format!("non-finite reward {r}"));
    }
    // Horner form keeps gamma = 0 exact: only the first reward survives.
    Ok(rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc))
}

/// Per-step discounted returns-to-go, `G_t = r_t + gamma G_{t+1}`.
pub fn returns_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}
