//! Likelihood-ratio gradient of expected payoff under a softmax policy:
//! the exact value next to Monte Carlo estimates of growing size.

use rl_kernel::policy::{score_function_gradient, Estimator};
use rl_kernel::rng::seeded;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let logits = [1.0, 0.0, -1.0];
    let payoffs = [0.0, 1.0, 2.0];
    let exact = score_function_gradient(&logits, &payoffs, Estimator::Exact, &mut seeded(0))?;
    println!("exact        {}", fmt(&exact));
    for n in [100, 10_000, 1_000_000] {
        let est = score_function_gradient(&logits, &payoffs, Estimator::Sampled(n), &mut seeded(1))?;
        println!("{n:>9} samples {}", fmt(&est));
    }
    Ok(())
}

fn fmt(g: &[f64]) -> String {
    g.iter().map(|v| format!("{v:+.4}")).collect::<Vec<_>>().join("  ")
}
