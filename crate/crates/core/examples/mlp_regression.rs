//! A small MLP fitted to sin(x) by minibatch SGD, verified against finite
//! differences and round-tripped through a checkpoint file.

use rand::Rng;
use rl_kernel::neural::{gradient_check, Activation, Loss, Mlp};
use rl_kernel::rng::seeded;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seeded(11);
    let mut net = Mlp::with_hidden(&[1, 16, 16, 1], Activation::Tanh, &mut rng)?;

    let probe = Loss::Mse(vec![0.3]);
    println!("finite-difference check: max relative error {:.2e}", gradient_check(&net, &[0.4], &probe, 1e-5)?);

    let xs: Vec<[f64; 1]> = (0..256).map(|_| [rng.random_range(-3.0..3.0)]).collect();
    for epoch in 0..=2000 {
        let batch: Vec<(&[f64], Loss)> = (0..32)
            .map(|_| {
                let x = &xs[rng.random_range(0..xs.len())];
                (x.as_slice(), Loss::Mse(vec![x[0].sin()]))
            })
            .collect();
        let (loss, grad) = net.batch_gradient(&batch)?;
        net.sgd_update(&grad, 0.05)?;
        if epoch % 500 == 0 {
            println!("step {epoch:>4}: minibatch loss {loss:.5}");
        }
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("sine.txt");
    net.save(&path)?;
    let restored = Mlp::load(&path)?;
    for x in [-2.0, 0.0, 1.5] {
        println!("f({x:>4}) = {:+.3}  sin = {:+.3}", restored.forward(&[x])?[0], f64::sin(x));
    }
    Ok(())
}
