//! Multi-armed bandits as one-step episodes.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{check_legal, DiscreteEnv, EnvState, Environment, VectorEnv};
use crate::dist::Categorical;
use crate::error::{contract, invalid, Result};
use crate::mdp::{Mdp, MdpBuilder, Outcome};
use crate::rng::SeededRng;

pub const START: usize = 0;
pub const DONE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BanditNoise {
    /// The payoff is the arm's mean.
    None,
    /// Pays 1 with probability equal to the arm's mean, else 0.
    Bernoulli,
    /// Mean plus Gaussian noise of the given standard deviation.
    Gaussian(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bandit {
    pub means: Vec<f64>,
    pub noise: BanditNoise,
}

impl Bandit {
    pub fn new(means: Vec<f64>, noise: BanditNoise) -> Result<Self> {
        if means.is_empty() {
            return invalid("a bandit needs at least one arm");
        }
        match noise {
            BanditNoise::Bernoulli if means.iter().any(|m| !(0.0..=1.0).contains(m)) => {
                return invalid("Bernoulli arm means must lie in [0, 1]");
            }
            BanditNoise::Gaussian(sd) if !(sd >= 0.0 && sd.is_finite()) => {
                return invalid(format!("noise deviation {sd} must be finite and non-negative"));
            }
            _ => {}
        }
        Ok(Self { means, noise })
    }

    pub fn deterministic(means: Vec<f64>) -> Result<Self> {
        Self::new(means, BanditNoise::None)
    }

    pub fn best_arm(&self) -> usize {
        crate::dist::argmax(&self.means)
    }

    pub fn pull(&self, arm: usize, rng: &mut SeededRng) -> f64 {
        let mean = self.means[arm];
        match self.noise {
            BanditNoise::None => mean,
            BanditNoise::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            BanditNoise::Gaussian(sd) => {
                mean + Normal::new(0.0, sd).expect("validated deviation").sample(rng)
            }
        }
    }
}

impl Environment for Bandit {
    type State = usize;

    fn num_actions(&self) -> usize {
        self.means.len()
    }

    fn reset(&self, _rng: &mut SeededRng) -> EnvState<usize> {
        EnvState {
            state: START,
            legal_actions: (0..self.means.len()).collect(),
            reward: 0.0,
            terminal: false,
            truncated: false,
        }
    }

    fn step(&self, state: &usize, action: usize, rng: &mut SeededRng) -> Result<EnvState<usize>> {
        if *state != START {
            return contract("the bandit episode is over");
        }
        check_legal(&self.legal_actions(state), action)?;
        Ok(EnvState {
            state: DONE,
            legal_actions: Vec::new(),
            reward: self.pull(action, rng),
            terminal: true,
            truncated: false,
        })
    }

    fn legal_actions(&self, state: &usize) -> Vec<usize> {
        if *state == START {
            (0..self.means.len()).collect()
        } else {
            Vec::new()
        }
    }

    fn is_terminal(&self, state: &usize) -> bool {
        *state == DONE
    }

    fn exact_model(&self) -> Option<Mdp> {
        let mut b = MdpBuilder::new(2, self.means.len(), 1.0)
            .episodic(true)
            .initial(Categorical::one_hot(2, START));
        b.set_terminal(DONE);
        for (a, mean) in self.means.iter().enumerate() {
            // expected payoff; the noise does not change values
            b.set_outcomes(
                START,
                a,
                vec![Outcome {
                    next: DONE,
                    prob: 1.0,
                    reward: *mean,
                }],
            );
        }
        b.build().ok()
    }
}

impl DiscreteEnv for Bandit {
    fn num_states(&self) -> usize {
        2
    }
}

impl VectorEnv for Bandit {
    fn observation_width(&self) -> usize {
        1
    }

    fn observe(&self, _state: &usize) -> Vec<f64> {
        vec![1.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn one_step_episodes() {
        let b = Bandit::deterministic(vec![0.2, 0.9]).unwrap();
        let mut rng = seeded(0);
        let s = b.reset(&mut rng);
        let next = b.step(&s.state, 1, &mut rng).unwrap();
        assert!(next.terminal);
        assert_eq!(next.reward, 0.9);
        assert!(b.step(&next.state, 0, &mut rng).is_err());
        assert!(b.step(&START, 2, &mut rng).is_err());
        assert_eq!(b.best_arm(), 1);
    }

    #[test]
    fn noisy_arms_average_to_their_means() {
        let mut rng = seeded(4);
        let b = Bandit::new(vec![0.3], BanditNoise::Bernoulli).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| b.pull(0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 0.01);
        let g = Bandit::new(vec![-1.0], BanditNoise::Gaussian(2.0)).unwrap();
        let mean = (0..n).map(|_| g.pull(0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean + 1.0).abs() < 0.03);
        assert!(Bandit::new(vec![1.5], BanditNoise::Bernoulli).is_err());
    }

    #[test]
    fn model_holds_expected_payoffs() {
        let b = Bandit::new(vec![0.5, 0.25], BanditNoise::Bernoulli).unwrap();
        let m = b.exact_model().unwrap();
        assert_eq!(m.reward(START, 1, DONE), 0.25);
    }
}
