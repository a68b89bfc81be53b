//! Discounted returns, expectations and entropy on tiny hand-checkable inputs.

use rl_kernel::dist::{entropy, expectation, softmax, Categorical};
use rl_kernel::mdp::{compute_return, Step, Trajectory};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rewards = [-1.0, -1.0, 20.0];
    let steps = rewards
        .iter()
        .enumerate()
        .map(|(t, r)| Step { state: t, action: 0, reward: *r, next_state: t + 1, terminal: t + 1 == rewards.len() })
        .collect();
    let traj = Trajectory::from_steps(steps)?;
    println!("return of {rewards:?} at gamma 0.9: {:.4}", compute_return(&traj, 0.9)?);

    let p = Categorical::new(vec![0.2, 0.3, 0.5])?;
    println!("E[f] = {:.4}", expectation(&p, &[22.0, 13.0, 7.4])?);
    println!("H(p) = {:.4} nats", entropy(&p));

    let q = softmax(&[2.0, 1.0, 0.0])?;
    println!("softmax([2, 1, 0]) = {:?}", q.probs());
    Ok(())
}
