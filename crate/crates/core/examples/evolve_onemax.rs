//! A genetic algorithm with elitism, crossover and Gaussian mutation on
//! one-max: fitness counts the genes above one half.

use rl_kernel::harness::run::one_max;
use rl_kernel::meta::{evolve, EvolveConfig};
use rl_kernel::rng::seeded;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = EvolveConfig {
        genome_len: 30,
        population: 40,
        generations: 60,
        mutation_sigma: 0.1,
        crossover_rate: 0.7,
        elites: 2,
        init_range: (0.0, 1.0),
    };
    let run = evolve(one_max, &cfg, &mut seeded(9))?;
    for (g, f) in run.best_per_generation.iter().enumerate().step_by(10) {
        println!("generation {g:>3}: best fitness {f}");
    }
    println!("best genome scores {:?} of {}", run.best.fitness.unwrap_or(f64::NAN), cfg.genome_len);
    Ok(())
}
