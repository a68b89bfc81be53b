//! Shared trunk with a policy head and a tanh value head.

use std::path::Path;

use crate::envs::{BoardState, Game};
use crate::error::{invalid, Result, RlError};
use crate::io::write_atomic;
use crate::neural::{Activation, Gradient, InitScale, Loss, Mlp, Trace};
use crate::policy::masked_softmax;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct DualHeadNet {
    pub trunk: Mlp,
    /// Logits over every move id.
    pub policy: Mlp,
    /// One tanh unit.
    pub value: Mlp,
}

/// Gradient for the three parts of a [`DualHeadNet`].
#[derive(Debug, Clone)]
pub struct DualGradient {
    pub trunk: Gradient,
    pub policy: Gradient,
    pub value: Gradient,
}

impl DualHeadNet {
    /// Relu trunk of the given hidden widths (at least one).
    pub fn new(input: usize, hidden: &[usize], moves: usize, rng: &mut SeededRng) -> Result<Self> {
        if hidden.is_empty() {
            return invalid("the trunk needs at least one hidden layer");
        }
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        let top = *hidden.last().expect("non-empty");
        Ok(Self {
            trunk: Mlp::new(&sizes, &vec![Activation::Relu; hidden.len()], InitScale::FanIn, rng)?,
            policy: Mlp::new(&[top, moves], &[Activation::Identity], InitScale::FanIn, rng)?,
            value: Mlp::new(&[top, 1], &[Activation::Tanh], InitScale::FanIn, rng)?,
        })
    }

    /// Input of two planes per cell, one logit per move.
    pub fn for_game<G: Game>(game: &G, hidden: &[usize], rng: &mut SeededRng) -> Result<Self> {
        Self::new(game.encode(&game.initial()).len(), hidden, game.num_moves(), rng)
    }

    pub fn num_moves(&self) -> usize {
        self.policy.output_width()
    }

    pub fn num_params(&self) -> usize {
        self.trunk.num_params() + self.policy.num_params() + self.value.num_params()
    }

    /// Raw logits and value.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, f64)> {
        let h = self.trunk.forward(input)?;
        Ok((self.policy.forward(&h)?, self.value.forward(&h)?[0]))
    }

    /// Move priors restricted to `legal`, indexed by move id, and the
    /// value for the side to move.
    pub fn evaluate<G: Game>(&self, game: &G, state: &BoardState, legal: &[usize]) -> Result<(Vec<f64>, f64)> {
        let (logits, v) = self.forward(&game.encode(state))?;
        let by_move: Vec<f64> = (0..logits.len()).map(|mv| logits[game.canonical_move(state, mv)]).collect();
        Ok((masked_softmax(&by_move, legal), v))
    }

    pub fn zero_gradient(&self) -> DualGradient {
        DualGradient {
            trunk: Gradient::zeros(self.trunk.num_params()),
            policy: Gradient::zeros(self.policy.num_params()),
            value: Gradient::zeros(self.value.num_params()),
        }
    }

    /// Adds `k` times the gradient of cross-entropy against `target_policy`
    /// plus `0.5 (v - z)^2`; returns the two loss values.
    pub fn accumulate(
        &self,
        input: &[f64],
        target_policy: &[f64],
        z: f64,
        k: f64,
        grad: &mut DualGradient,
    ) -> Result<(f64, f64)> {
        let trunk: Trace = self.trunk.forward_trace(input)?;
        let h = trunk.output();
        let pt = self.policy.forward_trace(h)?;
        let vt = self.value.forward_trace(h)?;
        let (pl, pd) = Loss::SoftmaxCrossEntropy(target_policy.to_vec()).value_and_grad(pt.output())?;
        let (vl, vd) = Loss::Mse(vec![z]).value_and_grad(vt.output())?;
        let mut dh = self.policy.accumulate(&pt, &pd, k, &mut grad.policy);
        for (d, e) in dh.iter_mut().zip(self.value.accumulate(&vt, &vd, k, &mut grad.value)) {
            *d += e;
        }
        // `dh` already carries the factor k
        self.trunk.accumulate_params(&trunk, &dh, 1.0, &mut grad.trunk);
        Ok((pl, vl))
    }

    pub fn sgd_update(&mut self, grad: &DualGradient, lr: f64) -> Result<()> {
        self.trunk.sgd_update(&grad.trunk, lr)?;
        self.policy.sgd_update(&grad.policy, lr)?;
        self.value.sgd_update(&grad.value, lr)
    }

    /// Three `mlp v1` checkpoints separated by section lines.
    pub fn to_checkpoint(&self) -> String {
        format!(
            "dual-head v1\n[trunk]\n{}[policy]\n{}[value]\n{}",
            self.trunk.to_checkpoint(),
            self.policy.to_checkpoint(),
            self.value.to_checkpoint()
        )
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("dual-head v1") {
            return Err(RlError::Parse("not a dual-head checkpoint".into()));
        }
        let mut sections: Vec<(String, String)> = Vec::new();
        for line in lines {
            let t = line.trim();
            if t.starts_with('[') && t.ends_with(']') {
                sections.push((t[1..t.len() - 1].to_string(), String::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push_str(line);
                body.push('\n');
            } else if !t.is_empty() {
                return Err(RlError::Parse(format!("stray line {line:?}")));
            }
        }
        let part = |name: &str| -> Result<Mlp> {
            let body = sections
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, b)| b)
                .ok_or_else(|| RlError::Parse(format!("checkpoint lacks [{name}]")))?;
            Mlp::from_checkpoint(body)
        };
        let net = Self {
            trunk: part("trunk")?,
            policy: part("policy")?,
            value: part("value")?,
        };
        let top = net.trunk.output_width();
        if net.policy.input_width() != top || net.value.input_width() != top || net.value.output_width() != 1 {
            return Err(RlError::Parse("head shapes do not fit the trunk".into()));
        }
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.to_checkpoint())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Hex, TicTacToe};
    use crate::rng::seeded;

    #[test]
    fn shapes_follow_the_board() {
        let mut rng = seeded(0);
        let net = DualHeadNet::for_game(&Hex::new(5), &[128, 128], &mut rng).unwrap();
        assert_eq!(net.trunk.input_width(), 50);
        assert_eq!(net.num_moves(), 25);
        let g = TicTacToe;
        let net = DualHeadNet::for_game(&g, &[64], &mut rng).unwrap();
        let s = TicTacToe::position("x.. ... ...");
        let legal = g.legal_moves(&s);
        let (p, v) = net.evaluate(&g, &s, &legal).unwrap();
        assert_eq!(p[0], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(v.abs() <= 1.0);
    }

    fn part_params(n: &mut DualHeadNet, part: usize) -> &mut [f64] {
        match part {
            0 => n.trunk.params_mut(),
            1 => n.policy.params_mut(),
            _ => n.value.params_mut(),
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded(3);
        let net = DualHeadNet::new(6, &[5, 4], 3, &mut rng).unwrap();
        let x = [1.0, 0.0, 0.5, -0.3, 0.2, 0.9];
        let target = [0.2, 0.5, 0.3];
        let z = -0.4;
        let loss = |n: &DualHeadNet| {
            let mut g = n.zero_gradient();
            let (a, b) = n.accumulate(&x, &target, z, 1.0, &mut g).unwrap();
            a + b
        };
        let mut grad = net.zero_gradient();
        net.accumulate(&x, &target, z, 1.0, &mut grad).unwrap();
        let h = 1e-6;
        for part in 0..3 {
            let len = [net.trunk.num_params(), net.policy.num_params(), net.value.num_params()][part];
            for i in 0..len {
                let mut plus = net.clone();
                let mut minus = net.clone();
                part_params(&mut plus, part)[i] += h;
                part_params(&mut minus, part)[i] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let analytic = [&grad.trunk, &grad.policy, &grad.value][part].0[i];
                assert!((numeric - analytic).abs() < 1e-6, "part {part} param {i}: {numeric} vs {analytic}");
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut rng = seeded(5);
        let net = DualHeadNet::new(4, &[3], 2, &mut rng).unwrap();
        let back = DualHeadNet::from_checkpoint(&net.to_checkpoint()).unwrap();
        assert_eq!(net, back);
        assert!(DualHeadNet::from_checkpoint("mlp v1").is_err());
    }
}
