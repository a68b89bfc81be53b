//! Cart-pole balancing with the classic Euler-integrated dynamics.

use rand::Rng;

use super::{check_legal, EnvState, Environment, VectorEnv};
use crate::error::Result;
use crate::rng::SeededRng;

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
/// Half the pole length, metres.
pub const HALF_LENGTH: f64 = 0.5;
pub const FORCE: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const ANGLE_LIMIT: f64 = 12.0 * std::f64::consts::PI / 180.0;
pub const POSITION_LIMIT: f64 = 2.4;
pub const MAX_STEPS: usize = 500;
pub const INIT_RANGE: f64 = 0.05;

/// `x` (m), `x_dot` (m/s), `theta` (rad), `theta_dot` (rad/s) plus elapsed steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub steps: usize,
}

impl CartPoleState {
    pub fn vector(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }

    pub fn failed(&self) -> bool {
        self.x.abs() > POSITION_LIMIT || self.theta.abs() > ANGLE_LIMIT
    }
}

/// Actions: 0 pushes left, 1 pushes right. Reward +1 per step survived.
#[derive(Debug, Clone, Copy, Default)]
pub struct CartPole;

impl CartPole {
    pub fn new() -> Self {
        CartPole
    }

    /// One Euler step under an arbitrary horizontal force (newtons).
    pub fn dynamics(s: &CartPoleState, force: f64) -> CartPoleState {
        let total_mass = CART_MASS + POLE_MASS;
        let pole_moment = POLE_MASS * HALF_LENGTH;
        let (sin, cos) = s.theta.sin_cos();
        let temp = (force + pole_moment * s.theta_dot * s.theta_dot * sin) / total_mass;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total_mass));
        let x_acc = temp - pole_moment * theta_acc * cos / total_mass;
        CartPoleState {
            x: s.x + TAU * s.x_dot,
            x_dot: s.x_dot + TAU * x_acc,
            theta: s.theta + TAU * s.theta_dot,
            theta_dot: s.theta_dot + TAU * theta_acc,
            steps: s.steps + 1,
        }
    }
}

impl Environment for CartPole {
    type State = CartPoleState;

    fn num_actions(&self) -> usize {
        2
    }

    fn reset(&self, rng: &mut SeededRng) -> EnvState<CartPoleState> {
        let mut draw = || rng.random_range(-INIT_RANGE..INIT_RANGE);
        let state = CartPoleState {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
            steps: 0,
        };
        EnvState {
            state,
            legal_actions: vec![0, 1],
            reward: 0.0,
            terminal: false,
            truncated: false,
        }
    }

    fn step(
        &self,
        state: &CartPoleState,
        action: usize,
        _rng: &mut SeededRng,
    ) -> Result<EnvState<CartPoleState>> {
        if self.is_terminal(state) || state.steps >= MAX_STEPS {
            return crate::error::contract("step after the cart-pole episode ended");
        }
        check_legal(&[0, 1], action)?;
        let force = if action == 1 { FORCE } else { -FORCE };
        let next = Self::dynamics(state, force);
        let terminal = next.failed();
        Ok(EnvState {
            state: next,
            legal_actions: if terminal { Vec::new() } else { vec![0, 1] },
            reward: 1.0,
            terminal,
            truncated: !terminal && next.steps >= MAX_STEPS,
        })
    }

    fn legal_actions(&self, state: &CartPoleState) -> Vec<usize> {
        if self.is_terminal(state) {
            Vec::new()
        } else {
            vec![0, 1]
        }
    }

    fn is_terminal(&self, state: &CartPoleState) -> bool {
        state.failed()
    }
}

impl VectorEnv for CartPole {
    fn observation_width(&self) -> usize {
        4
    }

    fn observe(&self, state: &CartPoleState) -> Vec<f64> {
        state.vector().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn reset_range() {
        let env = CartPole::new();
        let mut rng = seeded(5);
        for _ in 0..10_000 {
            let s = env.reset(&mut rng).state;
            assert!(s.vector().iter().all(|v| v.abs() < INIT_RANGE));
        }
    }

    #[test]
    fn upright_at_rest_is_a_fixed_point() {
        let mut s = CartPoleState {
            x: 0.0,
            x_dot: 0.0,
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
        };
        for _ in 0..10_000 {
            s = CartPole::dynamics(&s, 0.0);
            assert_eq!(s.vector(), [0.0; 4]);
        }
    }

    #[test]
    fn constant_push_fails_and_caps() {
        let env = CartPole::new();
        let mut rng = seeded(0);
        let mut s = env.reset(&mut rng);
        let mut n = 0;
        while !s.done() {
            s = env.step(&s.state, 1, &mut rng).unwrap();
            n += 1;
        }
        assert!(s.terminal);
        assert!(n < 100);
        assert!(env.step(&s.state, 0, &mut rng).is_err());
        assert!(env.step(&env.reset(&mut rng).state, 2, &mut rng).is_err());
    }

    #[test]
    fn deterministic_given_seed_and_actions() {
        let env = CartPole::new();
        let run = |seed| {
            let mut rng = seeded(seed);
            let mut s = env.reset(&mut rng);
            let mut trace = vec![s.state];
            for t in 0..30 {
                if s.done() {
                    break;
                }
                s = env.step(&s.state, t % 2, &mut rng).unwrap();
                trace.push(s.state);
            }
            trace
        };
        assert_eq!(run(9), run(9));
    }
}
