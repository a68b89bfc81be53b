//! Exact planning: value iteration on Taxi and on the four-rooms grid.

use rl_kernel::envs::{Environment, GridWorld, Taxi};
use rl_kernel::rng::seeded;
use rl_kernel::tabular::{bellman_residual, evaluate_greedy, q_from_values, value_iteration};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let taxi = Taxi::new();
    let mdp = taxi.exact_model().expect("taxi is tabular");
    let vi = value_iteration(&mdp, 1e-8)?;
    println!(
        "taxi: {} sweeps, last change {:.2e}, Bellman residual {:.2e}",
        vi.iterations,
        vi.last_change,
        bellman_residual(&mdp, &vi.values.values)
    );
    let q = q_from_values(&mdp, &vi.values.values);
    let ret = evaluate_greedy(&taxi, &q, &Taxi::start_states(), 200, &mut seeded(0))?;
    println!("taxi: greedy return from the start states {ret:.3}");

    let grid = GridWorld::four_rooms().with_gamma(0.9);
    let mdp = grid.exact_model().expect("grid is tabular");
    let vi = value_iteration(&mdp, 1e-10)?;
    let q = q_from_values(&mdp, &vi.values.values);
    let ret = evaluate_greedy(&grid, &q, grid.start_states(), 500, &mut seeded(0))?;
    println!("four rooms: {} sweeps, greedy return {ret:.3}", vi.iterations);
    println!("{}", grid.render(grid.start_states().first().copied()));
    Ok(())
}
