//! First-order MAML on a family of linear regression tasks against plain
//! joint training, compared after one adaptation step on new tasks.

use rl_kernel::harness::run::maml_init;
use rl_kernel::meta::{maml_train, post_adaptation_loss, LinearFamily, MamlConfig};
use rl_kernel::rng::seeded;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = LinearFamily::default();
    let init = maml_init(&mut seeded(0))?;
    let cfg = MamlConfig::default();
    let joint_cfg = MamlConfig {
        inner_steps: 0,
        ..cfg.clone()
    };
    let meta = maml_train(&family, &init, &cfg, &mut seeded(1))?;
    let joint = maml_train(&family, &init, &joint_cfg, &mut seeded(1))?;
    for (name, run) in [("meta-learned", &meta), ("joint", &joint)] {
        let loss = post_adaptation_loss(&family, &run.net, &cfg, 200, &mut seeded(2))?;
        println!(
            "{name:>12} init: slope {:+.3}, intercept {:+.3}, query loss after one step {loss:.4}",
            run.net.weight(0, 0, 0),
            run.net.params()[1]
        );
    }
    println!("task optima: {:?}", family.centers);
    Ok(())
}
