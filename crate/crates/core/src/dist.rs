//! Discrete distributions and the information-theoretic quantities built on them.

use rand::Rng;

use crate::error::{invalid, Result, RlError};
use crate::rng::SeededRng;

/// Tolerance on the total mass of a categorical distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A probability mass function over outcomes `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
}

impl Categorical {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return invalid("categorical over an empty support");
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return invalid(format!("probability {p} is negative or not finite"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights. All-zero weights give the uniform distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return invalid("categorical over an empty support");
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return invalid("weights must be finite and non-negative");
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Ok(Self::uniform(weights.len()));
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs at least one outcome");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn one_hot(n: usize, index: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Outcome with the largest probability; lowest index on ties.
    pub fn mode(&self) -> usize {
        argmax(&self.probs)
    }
}

/// Index of the maximum entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn expectation(dist: &Categorical, f: &[f64]) -> Result<f64> {
    if dist.len() != f.len() {
        return invalid(format!(
            "distribution has {} outcomes but f has {} values",
            dist.len(),
            f.len()
        ));
    }
    Ok(dist.probs.iter().zip(f).map(|(p, v)| p * v).sum())
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(dist: &Categorical) -> f64 {
    -dist
        .probs
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

pub fn cross_entropy(p: &Categorical, q: &Categorical) -> Result<f64> {
    check_same_support(p, q)?;
    let mut total = 0.0;
    for (i, (pi, qi)) in p.probs.iter().zip(&q.probs).enumerate() {
        if *pi == 0.0 {
            continue;
        }
        if *qi <= 0.0 {
            return Err(RlError::Divergence(format!(
                "q[{i}] = 0 where p[{i}] = {pi}"
            )));
        }
        total -= pi * qi.ln();
    }
    Ok(total)
}

/// `KL(p || q)`, computed term-wise so identical inputs give exactly zero.
pub fn kl_divergence(p: &Categorical, q: &Categorical) -> Result<f64> {
    check_same_support(p, q)?;
    let mut total = 0.0;
    for (i, (pi, qi)) in p.probs.iter().zip(&q.probs).enumerate() {
        if *pi == 0.0 {
            continue;
        }
        if *qi <= 0.0 {
            return Err(RlError::Divergence(format!(
                "q[{i}] = 0 where p[{i}] = {pi}"
            )));
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total.max(0.0))
}

fn check_same_support(p: &Categorical, q: &Categorical) -> Result<()> {
    if p.len() != q.len() {
        return invalid(format!(
            "supports differ: {} vs {} outcomes",
            p.len(),
            q.len()
        ));
    }
    Ok(())
}

/// Softmax with the max-shift, so large logits do not overflow.
pub fn softmax(logits: &[f64]) -> Result<Categorical> {
    if logits.is_empty() {
        return invalid("softmax of an empty vector");
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return invalid("softmax of non-finite logits");
    }
    Ok(Categorical {
        probs: softmax_vec(logits),
    })
}

/// Unchecked softmax for hot paths; logits must be non-empty and finite.
pub(crate) fn softmax_vec(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Inverse-CDF draw; consumes exactly one uniform from `rng`.
pub fn sample_categorical(dist: &Categorical, rng: &mut SeededRng) -> usize {
    sample_probs(&dist.probs, rng)
}

pub(crate) fn sample_probs(probs: &[f64], rng: &mut SeededRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the accumulated mass
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn cat(p: &[f64]) -> Categorical {
        Categorical::new(p.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(Categorical::new(vec![0.5, 0.6]).is_err());
        assert!(Categorical::new(vec![-0.1, 1.1]).is_err());
        assert!(Categorical::new(vec![]).is_err());
        assert!(Categorical::new(vec![0.5, 0.5 + 5e-10]).is_ok());
    }

    #[test]
    fn expectation_examples() {
        let e = expectation(&cat(&[0.2, 0.3, 0.5]), &[22.0, 13.0, 7.4]).unwrap();
        assert!((e - 12.0).abs() < 1e-12);
        let e = expectation(&cat(&[0.6, 0.4]), &[20.0, 10.0]).unwrap();
        assert!((e - 16.0).abs() < 1e-12);
        assert_eq!(expectation(&cat(&[1.0, 0.0]), &[5.0, 9.0]).unwrap(), 5.0);
        assert!(expectation(&cat(&[1.0, 0.0]), &[5.0]).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&cat(&[0.2, 0.3, 0.5])) - 1.03).abs() < 0.005);
        assert_eq!(entropy(&cat(&[1.0, 0.0, 0.0])), 0.0);
        assert!((entropy(&cat(&[0.5, 0.5])) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_examples() {
        let ln2 = 2f64.ln();
        let half = cat(&[0.5, 0.5]);
        assert!((cross_entropy(&half, &half).unwrap() - ln2).abs() < 1e-15);
        assert!((cross_entropy(&cat(&[1.0, 0.0]), &half).unwrap() - ln2).abs() < 1e-15);
        let h = cross_entropy(&cat(&[0.2, 0.8]), &cat(&[0.8, 0.2])).unwrap();
        let by_hand = -0.2 * 0.8f64.ln() - 0.8 * 0.2f64.ln();
        assert!((h - by_hand).abs() < 1e-15);
        assert!((h - 1.3321).abs() < 1e-4);
    }

    #[test]
    fn cross_entropy_raises_on_zero_q() {
        let err = cross_entropy(&cat(&[0.5, 0.5]), &cat(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, RlError::Divergence(_)));
        // zero q is fine where p is also zero
        assert!(cross_entropy(&cat(&[1.0, 0.0]), &cat(&[1.0, 0.0])).is_ok());
    }

    #[test]
    fn kl_examples() {
        let p = cat(&[0.2, 0.8]);
        let q = cat(&[0.8, 0.2]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let pq = kl_divergence(&p, &q).unwrap();
        let by_hand = 0.2 * (0.2f64 / 0.8).ln() + 0.8 * (0.8f64 / 0.2).ln();
        assert!((pq - by_hand).abs() < 1e-15);
        assert!((pq - 0.8318).abs() < 1e-4);
        let identity = cross_entropy(&p, &q).unwrap() - entropy(&p);
        assert!((pq - identity).abs() < 1e-12);

        let p = cat(&[0.1, 0.9]);
        let q = cat(&[0.6, 0.4]);
        let forward = kl_divergence(&p, &q).unwrap();
        let backward = kl_divergence(&q, &p).unwrap();
        assert!((forward - backward).abs() > 1e-3);
    }

    #[test]
    fn softmax_examples() {
        let s = softmax(&[4.2, 4.2, 4.2]).unwrap();
        for p in s.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let s = softmax(&[0.0, 3f64.ln()]).unwrap();
        assert!((s.probs()[0] - 0.25).abs() < 1e-15);
        assert!((s.probs()[1] - 0.75).abs() < 1e-15);
        assert!(softmax(&[]).is_err());
        let s = softmax(&[1000.0, -1000.0, 999.0]).unwrap();
        assert!(s.probs().iter().all(|p| p.is_finite()));
    }

    #[test]
    fn softmax_shift_invariance_is_exact() {
        let x = [0.3, -1.2, 2.5];
        let shifted: Vec<f64> = x.iter().map(|v| v + 7.0).collect();
        // the max-shift makes both evaluate identical differences when c is representable
        let a = softmax(&x).unwrap();
        let b = softmax(&shifted).unwrap();
        for (p, q) in a.probs().iter().zip(b.probs()) {
            assert!((p - q).abs() < 1e-15);
        }
        let a = softmax(&[1.0, 2.0, 3.0]).unwrap();
        let b = softmax(&[5.0, 6.0, 7.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_examples() {
        let mut rng = seeded(3);
        let degenerate = cat(&[1.0, 0.0, 0.0]);
        for _ in 0..1000 {
            assert_eq!(sample_categorical(&degenerate, &mut rng), 0);
        }
        let coin = cat(&[0.5, 0.5]);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| sample_categorical(&coin, &mut rng) == 0)
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((0.49..=0.51).contains(&freq), "{freq}");

        let mut a = seeded(11);
        let mut b = seeded(11);
        let p = cat(&[0.2, 0.3, 0.5]);
        let xs: Vec<usize> = (0..100).map(|_| sample_categorical(&p, &mut a)).collect();
        let ys: Vec<usize> = (0..100).map(|_| sample_categorical(&p, &mut b)).collect();
        assert_eq!(xs, ys);
    }

    fn random_dist(weights: Vec<f64>) -> Categorical {
        Categorical::from_weights(&weights).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn softmax_is_a_distribution(x in prop::collection::vec(-800.0f64..800.0, 1..12)) {
            let s = softmax(&x).unwrap();
            let total: f64 = s.probs().iter().sum();
            prop_assert!((total - 1.0).abs() < MASS_TOLERANCE);
            prop_assert!(s.probs().iter().all(|p| *p >= 0.0));
        }

        #[test]
        fn kl_is_non_negative(
            pair in (2usize..8).prop_flat_map(|n| (
                prop::collection::vec(0.01f64..1.0, n),
                prop::collection::vec(0.01f64..1.0, n),
            ))
        ) {
            let p = random_dist(pair.0);
            let q = random_dist(pair.1);
            let d = kl_divergence(&p, &q).unwrap();
            prop_assert!(d >= 0.0);
            if p != q {
                let max_gap = p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if max_gap > 1e-6 {
                    prop_assert!(d > 0.0);
                }
            }
        }

        #[test]
        fn uniform_maximizes_entropy(w in prop::collection::vec(0.0f64..1.0, 2..10)) {
            let n = w.len();
            let h_uniform = entropy(&Categorical::uniform(n));
            let h = entropy(&random_dist(w));
            prop_assert!(h <= h_uniform + 1e-12);
            prop_assert!((h_uniform - (n as f64).ln()).abs() < 1e-12);
        }

        #[test]
        fn perturbing_uniform_lowers_entropy(
            d in prop::collection::vec(-1.0f64..1.0, 2..10),
            eps in 1e-4f64..0.5,
        ) {
            let n = d.len();
            let mean = d.iter().sum::<f64>() / n as f64;
            let spread = d.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
            prop_assume!(spread > 1e-6);
            let scale = eps / (n as f64 * spread);
            let probs: Vec<f64> = d.iter().map(|x| 1.0 / n as f64 + scale * (x - mean)).collect();
            let h = entropy(&Categorical::from_weights(&probs).unwrap());
            prop_assert!(h < (n as f64).ln());
        }
    }
}
