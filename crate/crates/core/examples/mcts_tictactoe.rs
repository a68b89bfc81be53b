//! UCT search with random playouts against the exhaustive minimax oracle.

use rl_kernel::envs::{Game, TicTacToe};
use rl_kernel::rng::seeded;
use rl_kernel::search::{
    mcts_search, play_match, Leaf, MctsAgent, MctsConfig, MinimaxAgent, MinimaxSolver, RandomAgent, Selection,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = TicTacToe;
    let root = game.initial();
    let mut solver = MinimaxSolver::new(game);
    println!("minimax value of the empty board: {}", solver.value(&root));

    for sims in [100, 1_000, 10_000] {
        let r = mcts_search(&game, &root, &MctsConfig::new(sims, Selection::uct()), Leaf::RandomPlayout, &mut seeded(0))?;
        println!("MCTS {sims:>6} simulations: root value {:+.3}, opens at cell {}", r.value, r.action);
    }

    let threat = TicTacToe::position("xx. oo. ...");
    let r = mcts_search(&game, &threat, &MctsConfig::new(200, Selection::uct()), Leaf::RandomPlayout, &mut seeded(1))?;
    println!("xx. / oo. / ... : MCTS plays {}, minimax says {:?}", r.action, solver.optimal_moves(&threat));

    let mut mcts = MctsAgent::playouts("mcts-1000", MctsConfig::new(1_000, Selection::uct()));
    let vs_random = play_match(&game, &mut mcts, &mut RandomAgent, 20, 0, &mut seeded(2))?.total();
    let vs_minimax = play_match(&game, &mut mcts, &mut MinimaxAgent::new(game), 10, 0, &mut seeded(3))?.total();
    println!("vs random  W/D/L {}/{}/{}", vs_random.wins, vs_random.draws, vs_random.losses);
    println!("vs minimax W/D/L {}/{}/{}", vs_minimax.wins, vs_minimax.draws, vs_minimax.losses);
    Ok(())
}
