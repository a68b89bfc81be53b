//! Counterfactual regret minimization on Kuhn poker: exploitability of the
//! average strategy as iterations grow, and the resulting strategy table.

use rl_kernel::cfr::{cfr_solve, exploitability, StrategyProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("uniform play is exploitable by {:.4} chips/hand", exploitability(&StrategyProfile::uniform())?);
    let run = cfr_solve(20_000, 2_000)?;
    for (iteration, e) in &run.trace {
        println!("iteration {iteration:>6}: exploitability {e:.2e}");
    }
    println!("game value for the first player: {:.5}", run.game_value);
    print!("{}", run.profile.to_csv().render());
    Ok(())
}
