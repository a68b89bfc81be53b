//! A round-robin on tic-tac-toe between random play, minimax and two MCTS
//! budgets, reported as a points matrix.

use rl_kernel::harness::{tournament, TournamentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let text = format!(
        "[tournament]\ngame = tictactoe\ngames = 10\nseed = 1\nout = {}\n\n[agents]\nrandom = random\nminimax = minimax\nmcts50 = mcts 50\nmcts2000 = mcts 2000\n",
        dir.path().display()
    );
    let cfg = TournamentConfig::parse(&text)?;
    let result = tournament(&cfg)?;
    print!("{}", result.matrix_csv().render());
    Ok(())
}
