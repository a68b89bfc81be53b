//! Multilayer perceptrons with hand-written backpropagation.
//!
//! Parameters live in one flat vector: for each layer, the weight matrix
//! (row-major, `outputs x inputs`) followed by its bias.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::dist::softmax_vec;
use crate::error::{invalid, Result, RlError};
use crate::io::write_atomic;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative from the pre-activation `z` and output `a`; relu'(0) = 0.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = RlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(RlError::Parse(format!("unknown activation {other:?}"))),
        }
    }
}

/// Half-width of the uniform weight initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScale {
    /// `1 / sqrt(fan_in)` per layer.
    FanIn,
    Fixed(f64),
}

impl fmt::Display for InitScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitScale::FanIn => f.write_str("fan_in"),
            InitScale::Fixed(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    offset: usize,
}

impl LayerShape {
    fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }

    fn bias(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.inputs * self.outputs;
        start..start + self.outputs
    }
}

/// A gradient aligned index-for-index with an `Mlp`'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient(pub Vec<f64>);

impl Gradient {
    pub fn zeros(len: usize) -> Self {
        Gradient(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `self += k * other`
    pub fn add_scaled(&mut self, other: &Gradient, k: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += k * b;
        }
    }

    pub fn scale(&mut self, k: f64) {
        for a in &mut self.0 {
            *a *= k;
        }
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.is_finite())
    }

    /// Rescales to at most `max_norm` in Euclidean norm.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let n = self.norm();
        if n > max_norm && n > 0.0 {
            self.scale(max_norm / n);
        }
    }
}

/// Loss on the network output, with its target.
#[derive(Debug, Clone, PartialEq)]
pub enum Loss {
    /// `0.5 * sum_i (o_i - t_i)^2`
    Mse(Vec<f64>),
    /// `-sum_i t_i log softmax(o)_i` for a target distribution `t`.
    SoftmaxCrossEntropy(Vec<f64>),
    /// `sum_i w_i o_i` with externally supplied weights, e.g. the
    /// advantage-weighted log-probability terms of a policy gradient.
    Weighted(Vec<f64>),
}

impl Loss {
    /// Cross-entropy against class `k` of `n`.
    pub fn class(n: usize, k: usize) -> Self {
        let mut t = vec![0.0; n];
        t[k] = 1.0;
        Loss::SoftmaxCrossEntropy(t)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Loss::Mse(_) => "mse",
            Loss::SoftmaxCrossEntropy(_) => "cross_entropy_with_softmax",
            Loss::Weighted(_) => "scalar_weighted",
        }
    }

    fn target(&self) -> &[f64] {
        match self {
            Loss::Mse(t) | Loss::SoftmaxCrossEntropy(t) | Loss::Weighted(t) => t,
        }
    }

    /// Loss value and its gradient with respect to the output.
    pub fn value_and_grad(&self, output: &[f64]) -> Result<(f64, Vec<f64>)> {
        let target = self.target();
        if target.len() != output.len() {
            return invalid(format!(
                "{} target has {} entries for {} outputs",
                self.name(),
                target.len(),
                output.len()
            ));
        }
        Ok(match self {
            Loss::Mse(t) => {
                let diff: Vec<f64> = output.iter().zip(t).map(|(o, t)| o - t).collect();
                (0.5 * diff.iter().map(|d| d * d).sum::<f64>(), diff)
            }
            Loss::SoftmaxCrossEntropy(t) => {
                let p = softmax_vec(output);
                let max = output.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let log_z = max + output.iter().map(|o| (o - max).exp()).sum::<f64>().ln();
                let mass: f64 = t.iter().sum();
                let value = t
                    .iter()
                    .zip(output)
                    .filter(|(t, _)| **t != 0.0)
                    .map(|(t, o)| -t * (o - log_z))
                    .sum();
                let grad = p.iter().zip(t).map(|(p, t)| mass * p - t).collect();
                (value, grad)
            }
            Loss::Weighted(w) => (w.iter().zip(output).map(|(w, o)| w * o).sum(), w.clone()),
        })
    }
}

/// Activations recorded by a forward pass, needed for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `layers + 1` entries: the input, then each layer's output.
    activations: Vec<Vec<f64>>,
    /// Pre-activations per layer.
    pre: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has an input")
    }

    /// Smallest `|z|` over all relu pre-activations, `inf` without relus.
    pub fn min_relu_margin(&self, net: &Mlp) -> f64 {
        net.layers
            .iter()
            .zip(&self.pre)
            .filter(|(l, _)| l.activation == Activation::Relu)
            .flat_map(|(_, z)| z.iter().map(|v| v.abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<LayerShape>,
    params: Vec<f64>,
    init: InitScale,
}

impl Mlp {
    /// `sizes` lists widths from input to output; `activations` has one
    /// entry per layer (`sizes.len() - 1`). Weights are uniform in
    /// `[-scale, scale]`, biases zero.
    pub fn new(sizes: &[usize], activations: &[Activation], init: InitScale, rng: &mut SeededRng) -> Result<Self> {
        let mut net = Self::zeros(sizes, activations)?;
        net.init = init;
        if let InitScale::Fixed(s) = init {
            if !(s >= 0.0 && s.is_finite()) {
                return invalid(format!("init scale {s} must be finite and non-negative"));
            }
        }
        for layer in net.layers.clone() {
            let scale = match init {
                InitScale::FanIn => 1.0 / (layer.inputs as f64).sqrt(),
                InitScale::Fixed(s) => s,
            };
            for w in &mut net.params[layer.weights()] {
                *w = if scale > 0.0 {
                    rng.random_range(-scale..=scale)
                } else {
                    0.0
                };
            }
        }
        Ok(net)
    }

    /// All-zero parameters.
    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        if sizes.len() < 2 {
            return invalid("an MLP needs an input width and at least one layer");
        }
        if sizes.contains(&0) {
            return invalid(format!("zero-width layer in {sizes:?}"));
        }
        if activations.len() != sizes.len() - 1 {
            return invalid(format!(
                "{} activations for {} layers",
                activations.len(),
                sizes.len() - 1
            ));
        }
        let mut layers = Vec::with_capacity(activations.len());
        let mut offset = 0;
        for (w, activation) in sizes.windows(2).zip(activations) {
            layers.push(LayerShape {
                inputs: w[0],
                outputs: w[1],
                activation: *activation,
                offset,
            });
            offset += w[0] * w[1] + w[1];
        }
        Ok(Self {
            layers,
            params: vec![0.0; offset],
            init: InitScale::Fixed(0.0),
        })
    }

    /// Hidden layers use `hidden`, the output layer is linear.
    pub fn with_hidden(sizes: &[usize], hidden: Activation, rng: &mut SeededRng) -> Result<Self> {
        let n = sizes.len().saturating_sub(1);
        let mut acts = vec![hidden; n];
        if let Some(last) = acts.last_mut() {
            *last = Activation::Identity;
        }
        Self::new(sizes, &acts, InitScale::FanIn, rng)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn init_scale(&self) -> InitScale {
        self.init
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.params.len() {
            return invalid(format!("{} parameters for a net of {}", theta.len(), self.params.len()));
        }
        self.params.copy_from_slice(theta);
        Ok(())
    }

    /// Weight `(out, inp)` of layer `layer`.
    pub fn weight(&self, layer: usize, out: usize, inp: usize) -> f64 {
        let l = &self.layers[layer];
        self.params[l.offset + out * l.inputs + inp]
    }

    pub fn set_weight(&mut self, layer: usize, out: usize, inp: usize, v: f64) {
        let l = self.layers[layer];
        self.params[l.offset + out * l.inputs + inp] = v;
    }

    pub fn set_bias(&mut self, layer: usize, out: usize, v: f64) {
        let l = self.layers[layer];
        self.params[l.bias().start + out] = v;
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_width() {
            return invalid(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_width()
            ));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut a = input.to_vec();
        for layer in &self.layers {
            a = self
                .preactivation(layer, &a)
                .into_iter()
                .map(|z| layer.activation.apply(z))
                .collect();
        }
        Ok(a)
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<Trace> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        activations.push(input.to_vec());
        for layer in &self.layers {
            let z = self.preactivation(layer, activations.last().expect("input pushed"));
            activations.push(z.iter().map(|z| layer.activation.apply(*z)).collect());
            pre.push(z);
        }
        Ok(Trace { activations, pre })
    }

    fn preactivation(&self, layer: &LayerShape, x: &[f64]) -> Vec<f64> {
        let w = &self.params[layer.weights()];
        let b = &self.params[layer.bias()];
        let support = sparse_support(x);
        (0..layer.outputs)
            .map(|o| {
                let row = &w[o * layer.inputs..(o + 1) * layer.inputs];
                match &support {
                    Some(nz) => b[o] + nz.iter().map(|i| row[*i] * x[*i]).sum::<f64>(),
                    None => b[o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>(),
                }
            })
            .collect()
    }

    /// Loss value and exact gradient with respect to every parameter.
    pub fn backward(&self, input: &[f64], loss: &Loss) -> Result<(f64, Gradient)> {
        let trace = self.forward_trace(input)?;
        let (value, dout) = loss.value_and_grad(trace.output())?;
        let mut grad = Gradient::zeros(self.params.len());
        self.accumulate(&trace, &dout, 1.0, &mut grad);
        Ok((value, grad))
    }

    /// Backpropagates `d_output = dL/d(output)` through a recorded trace,
    /// adding `k * dL/dtheta` into `grad`; returns `dL/d(input)`.
    pub fn accumulate(&self, trace: &Trace, d_output: &[f64], k: f64, grad: &mut Gradient) -> Vec<f64> {
        self.backprop(trace, d_output, k, grad, true)
    }

    /// As [`Mlp::accumulate`] without computing the input gradient.
    pub fn accumulate_params(&self, trace: &Trace, d_output: &[f64], k: f64, grad: &mut Gradient) {
        self.backprop(trace, d_output, k, grad, false);
    }

    fn backprop(&self, trace: &Trace, d_output: &[f64], k: f64, grad: &mut Gradient, input_grad: bool) -> Vec<f64> {
        debug_assert_eq!(d_output.len(), self.output_width());
        let mut delta: Vec<f64> = d_output.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let z = &trace.pre[i];
            let a = &trace.activations[i + 1];
            for o in 0..layer.outputs {
                delta[o] *= layer.activation.derivative(z[o], a[o]);
            }
            let prev = &trace.activations[i];
            let support = sparse_support(prev);
            let w_range = layer.weights();
            let b_range = layer.bias();
            {
                let gw = &mut grad.0[w_range.clone()];
                for o in 0..layer.outputs {
                    let d = k * delta[o];
                    if d != 0.0 {
                        let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                        match &support {
                            Some(nz) => {
                                for j in nz {
                                    row[*j] += d * prev[*j];
                                }
                            }
                            None => {
                                for (g, x) in row.iter_mut().zip(prev) {
                                    *g += d * x;
                                }
                            }
                        }
                    }
                }
            }
            for (g, d) in grad.0[b_range].iter_mut().zip(&delta) {
                *g += k * d;
            }
            if i == 0 && !input_grad {
                return Vec::new();
            }
            let w = &self.params[w_range];
            let mut below = vec![0.0; layer.inputs];
            for o in 0..layer.outputs {
                let d = delta[o];
                if d != 0.0 {
                    let row = &w[o * layer.inputs..(o + 1) * layer.inputs];
                    for (b, w) in below.iter_mut().zip(row) {
                        *b += d * w;
                    }
                }
            }
            delta = below;
        }
        delta
    }

    /// Mean loss and mean gradient over a minibatch.
    pub fn batch_gradient(&self, batch: &[(&[f64], Loss)]) -> Result<(f64, Gradient)> {
        if batch.is_empty() {
            return invalid("empty minibatch");
        }
        let mut grad = Gradient::zeros(self.params.len());
        let mut total = 0.0;
        let k = 1.0 / batch.len() as f64;
        for (x, loss) in batch {
            let trace = self.forward_trace(x)?;
            let (value, dout) = loss.value_and_grad(trace.output())?;
            total += value;
            self.accumulate(&trace, &dout, k, &mut grad);
        }
        Ok((total * k, grad))
    }

    /// `theta -= lr * grad`
    pub fn sgd_update(&mut self, grad: &Gradient, lr: f64) -> Result<()> {
        if grad.len() != self.params.len() {
            return invalid(format!("gradient of {} for {} parameters", grad.len(), self.params.len()));
        }
        for (p, g) in self.params.iter_mut().zip(&grad.0) {
            *p -= lr * g;
        }
        Ok(())
    }

    /// Text checkpoint: a header line, then one parameter per line with 17
    /// significant digits so loading restores every bit.
    pub fn to_checkpoint(&self) -> String {
        let sizes: Vec<String> = self.sizes().iter().map(|s| s.to_string()).collect();
        let acts: Vec<&str> = self.layers.iter().map(|l| l.activation.name()).collect();
        let mut out = format!(
            "mlp v1 sizes={} activations={} init={}\n",
            sizes.join(","),
            acts.join(","),
            self.init
        );
        for p in &self.params {
            out.push_str(&format!("{p:.16e}\n"));
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| RlError::Parse("empty checkpoint".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("mlp") || fields.next() != Some("v1") {
            return Err(RlError::Parse(format!("bad checkpoint header {header:?}")));
        }
        let mut sizes = None;
        let mut acts = None;
        let mut init = InitScale::FanIn;
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| RlError::Parse(format!("bad header field {field:?}")))?;
            match key {
                "sizes" => {
                    sizes = Some(
                        value
                            .split(',')
                            .map(|s| s.parse::<usize>().map_err(|_| RlError::Parse(format!("bad size {s:?}"))))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "activations" => acts = Some(value.split(',').map(str::parse).collect::<Result<Vec<Activation>>>()?),
                "init" => {
                    init = match value {
                        "fan_in" => InitScale::FanIn,
                        v => InitScale::Fixed(v.parse().map_err(|_| RlError::Parse(format!("bad init {v:?}")))?),
                    }
                }
                _ => return Err(RlError::Parse(format!("unknown header field {key:?}"))),
            }
        }
        let sizes = sizes.ok_or_else(|| RlError::Parse("checkpoint lacks sizes".into()))?;
        let acts = acts.ok_or_else(|| RlError::Parse("checkpoint lacks activations".into()))?;
        let mut net = Self::zeros(&sizes, &acts)?;
        net.init = init;
        let theta: Vec<f64> = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse().map_err(|_| RlError::Parse(format!("bad parameter {l:?}"))))
            .collect::<Result<_>>()?;
        if theta.len() != net.params.len() {
            return Err(RlError::Parse(format!(
                "checkpoint has {} parameters, shape needs {}",
                theta.len(),
                net.params.len()
            )));
        }
        net.params = theta;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.to_checkpoint())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&std::fs::read_to_string(path)?)
    }
}

/// Indices of the non-zero entries of a wide, mostly-zero vector (one-hot
/// encodings); `None` when a dense loop is cheaper. Skipping exact zeros
/// leaves every sum bit-identical.
fn sparse_support(x: &[f64]) -> Option<Vec<usize>> {
    if x.len() < 64 {
        return None;
    }
    let nz: Vec<usize> = (0..x.len()).filter(|i| x[*i] != 0.0).collect();
    (nz.len() * 4 <= x.len()).then_some(nz)
}

/// Central-difference check of `backward`: the largest
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)` over all
/// parameters.
pub fn gradient_check(net: &Mlp, input: &[f64], loss: &Loss, h: f64) -> Result<f64> {
    if !(h > 1e-8 && h < 1e-2) {
        return invalid(format!("step {h} outside (1e-8, 1e-2)"));
    }
    let (_, analytic) = net.backward(input, loss)?;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for i in 0..net.num_params() {
        let original = probe.params[i];
        probe.params[i] = original + h;
        let (plus, _) = loss.value_and_grad(&probe.forward(input)?)?;
        probe.params[i] = original - h;
        let (minus, _) = loss.value_and_grad(&probe.forward(input)?)?;
        probe.params[i] = original;
        let numeric = (plus - minus) / (2.0 * h);
        let a = analytic.0[i];
        let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    use Activation::*;

    #[test]
    fn init_is_deterministic_and_shaped() {
        let a = Mlp::new(&[4, 8, 2], &[Relu, Identity], InitScale::FanIn, &mut seeded(3)).unwrap();
        let b = Mlp::new(&[4, 8, 2], &[Relu, Identity], InitScale::FanIn, &mut seeded(3)).unwrap();
        assert_eq!(a.params(), b.params());
        assert_eq!(a.num_params(), 4 * 8 + 8 + 8 * 2 + 2);
        assert!(a.params()[..32].iter().all(|w| w.abs() <= 0.5));
        assert!(a.params()[32..40].iter().all(|b| *b == 0.0));
        assert!(a.to_checkpoint().lines().next().unwrap().ends_with("init=fan_in"));
    }

    #[test]
    fn bad_shapes_are_rejected() {
        assert!(Mlp::zeros(&[4], &[]).is_err());
        assert!(Mlp::zeros(&[4, 0, 2], &[Relu, Identity]).is_err());
        assert!(Mlp::zeros(&[4, 2], &[Relu, Identity]).is_err());
        let net = Mlp::zeros(&[3, 2], &[Identity]).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_scale_leaves_only_the_bias_path() {
        let mut net = Mlp::new(&[2, 2], &[Identity], InitScale::Fixed(0.0), &mut seeded(0)).unwrap();
        net.set_bias(0, 1, 0.5);
        assert_eq!(net.forward(&[7.0, -3.0]).unwrap(), vec![0.0, 0.5]);
    }

    #[test]
    fn identity_blocks_pass_input_through() {
        let mut net = Mlp::zeros(&[3, 3, 3], &[Identity, Identity]).unwrap();
        for l in 0..2 {
            for i in 0..3 {
                net.set_weight(l, i, i, 1.0);
            }
        }
        assert_eq!(net.forward(&[1.5, -2.0, 0.25]).unwrap(), vec![1.5, -2.0, 0.25]);
    }

    #[test]
    fn relu_kills_negative_preactivations() {
        let mut net = Mlp::zeros(&[2, 2], &[Relu]).unwrap();
        net.set_weight(0, 0, 0, -1.0);
        net.set_weight(0, 1, 1, -2.0);
        assert_eq!(net.forward(&[1.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn affine_layer_by_hand() {
        let mut net = Mlp::zeros(&[2, 2], &[Identity]).unwrap();
        net.set_params(&[1.0, 2.0, 3.0, 4.0, 0.5, -0.5]).unwrap();
        // [1 2; 3 4] [5, 6] + [0.5, -0.5]
        assert_eq!(net.forward(&[5.0, 6.0]).unwrap(), vec![17.5, 38.5]);
    }

    #[test]
    fn mse_at_target_is_flat() {
        let net = Mlp::new(&[3, 4, 2], &[Tanh, Identity], InitScale::FanIn, &mut seeded(1)).unwrap();
        let out = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        let (loss, grad) = net.backward(&[0.1, 0.2, 0.3], &Loss::Mse(out)).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.0.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn softmax_cross_entropy_output_gradient() {
        let loss = Loss::class(3, 2);
        let o = [1.0, 2.0, 0.5];
        let (_, g) = loss.value_and_grad(&o).unwrap();
        let z: f64 = o.iter().map(|x: &f64| x.exp()).sum();
        let expected = [1f64.exp() / z, 2f64.exp() / z, 0.5f64.exp() / z - 1.0];
        for (a, b) in g.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sgd_examples() {
        let mut net = Mlp::new(&[2, 3, 1], &[Relu, Identity], InitScale::FanIn, &mut seeded(2)).unwrap();
        let before = net.params().to_vec();
        net.sgd_update(&Gradient::zeros(net.num_params()), 0.1).unwrap();
        assert_eq!(net.params(), &before[..]);

        let mut halves = net.clone();
        let g = Gradient(before.iter().map(|p| p * 0.3 + 0.1).collect());
        halves.sgd_update(&g, 0.05).unwrap();
        halves.sgd_update(&g, 0.05).unwrap();
        let mut full = net.clone();
        full.sgd_update(&g, 0.1).unwrap();
        for (a, b) in halves.params().iter().zip(full.params()) {
            assert!((a - b).abs() < 1e-15);
        }

        net.sgd_update(&Gradient(before.clone()), 1.0).unwrap();
        assert!(net.params().iter().all(|p| *p == 0.0));
    }

    #[test]
    fn sgd_on_a_quadratic_contracts_at_the_closed_form_rate() {
        // 0.5 (w - 3)^2 through a bias-only net contracts by |1 - lr|,
        // (w - 3)^2 by |1 - 2 lr|
        let mut net = Mlp::zeros(&[1, 1], &[Identity]).unwrap();
        let lr = 0.3;
        let mut err = 3.0f64;
        for _ in 0..20 {
            let (_, g) = net.backward(&[0.0], &Loss::Mse(vec![3.0])).unwrap();
            net.sgd_update(&g, lr).unwrap();
            err *= 1.0 - lr;
            assert!((3.0 - net.params()[1] - err).abs() < 1e-12);
        }
        let mut w = 0.0f64;
        let mut err = 3.0f64;
        for _ in 0..20 {
            let (_, g) = Loss::Mse(vec![3.0]).value_and_grad(&[w]).unwrap();
            w -= lr * 2.0 * g[0];
            err *= (1.0 - 2.0 * lr).abs();
            assert!(((3.0 - w).abs() - err).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_net_gradient_check_is_exact() {
        let net = Mlp::zeros(&[2, 3, 2], &[Tanh, Identity]).unwrap();
        let err = gradient_check(&net, &[0.0, 0.0], &Loss::Mse(vec![0.0, 0.0]), 1e-5).unwrap();
        assert_eq!(err, 0.0);
        assert!(gradient_check(&net, &[0.0, 0.0], &Loss::Mse(vec![0.0, 0.0]), 0.1).is_err());
    }

    #[test]
    fn accumulate_returns_input_gradient() {
        let net = Mlp::new(&[3, 5, 2], &[Tanh, Identity], InitScale::FanIn, &mut seeded(7)).unwrap();
        let x = [0.3, -0.2, 0.9];
        let w = [0.7, -1.3];
        let trace = net.forward_trace(&x).unwrap();
        let mut g = Gradient::zeros(net.num_params());
        let dx = net.accumulate(&trace, &w, 1.0, &mut g);
        let h = 1e-6;
        for i in 0..3 {
            let mut xp = x;
            xp[i] += h;
            let mut xm = x;
            xm[i] -= h;
            let f = |v: &[f64]| net.forward(v).unwrap().iter().zip(&w).map(|(o, w)| o * w).sum::<f64>();
            assert!(((f(&xp) - f(&xm)) / (2.0 * h) - dx[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn batch_gradient_is_the_mean() {
        let net = Mlp::new(&[2, 3, 1], &[Tanh, Identity], InitScale::FanIn, &mut seeded(5)).unwrap();
        let xs = [[0.1, 0.2], [-0.5, 0.4]];
        let batch: Vec<(&[f64], Loss)> = xs.iter().map(|x| (&x[..], Loss::Mse(vec![1.0]))).collect();
        let (mean_loss, mean) = net.batch_gradient(&batch).unwrap();
        let (l0, g0) = net.backward(&xs[0], &Loss::Mse(vec![1.0])).unwrap();
        let (l1, g1) = net.backward(&xs[1], &Loss::Mse(vec![1.0])).unwrap();
        assert!((mean_loss - (l0 + l1) / 2.0).abs() < 1e-15);
        for i in 0..mean.len() {
            assert!((mean.0[i] - (g0.0[i] + g1.0[i]) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let net = Mlp::new(&[3, 7, 2], &[Relu, Identity], InitScale::FanIn, &mut seeded(11)).unwrap();
        let back = Mlp::from_checkpoint(&net.to_checkpoint()).unwrap();
        assert_eq!(back, net);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        net.save(&path).unwrap();
        assert_eq!(Mlp::load(&path).unwrap(), net);
        assert!(Mlp::from_checkpoint("mlp v1 sizes=2,1 activations=identity\n1\n").is_err());
    }

    #[test]
    fn equal_nets_give_identical_outputs() {
        let a = Mlp::new(&[4, 6, 3], &[Relu, Tanh], InitScale::FanIn, &mut seeded(9)).unwrap();
        let b = Mlp::from_checkpoint(&a.to_checkpoint()).unwrap();
        let x = [0.3, -1.2, 2.5, 0.0];
        assert_eq!(a.forward(&x).unwrap(), b.forward(&x).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn gradients_match_finite_differences(seed in 0u64..10_000, kind in 0usize..3) {
            let mut rng = seeded(seed);
            let net = Mlp::new(&[3, 4, 3], &[Tanh, Identity], InitScale::Fixed(1.0), &mut rng).unwrap();
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let loss = match kind {
                0 => Loss::Mse(t),
                1 => Loss::class(3, seed as usize % 3),
                _ => Loss::Weighted(t),
            };
            prop_assert!(gradient_check(&net, &x, &loss, 1e-5).unwrap() < 1e-5);
        }
    }
}
