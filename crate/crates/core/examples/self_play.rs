//! Self-play training of a policy/value network guiding PUCT search on
//! tic-tac-toe, then a match between the trained and untrained networks.

use rl_kernel::envs::TicTacToe;
use rl_kernel::rng::seeded;
use rl_kernel::search::{play_match, self_play_train, DualHeadNet, MctsAgent, MctsConfig, Selection, SelfPlayConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = TicTacToe;
    let mut rng = seeded(5);
    let net = DualHeadNet::for_game(&game, &[64], &mut rng)?;
    let cfg = SelfPlayConfig {
        iterations: 4,
        games_per_iteration: 50,
        simulations: 50,
        ..SelfPlayConfig::default()
    };
    let run = self_play_train(&game, net, &cfg, &mut rng)?;
    for m in &run.metrics {
        println!(
            "iteration {}: {} examples, policy loss {:.3}, value loss {:.3}, self-play X/O/draw {}/{}/{}",
            m.iteration, m.examples, m.policy_loss, m.value_loss, m.first_player_wins, m.second_player_wins, m.draws
        );
    }
    let search = MctsConfig::new(50, Selection::puct());
    let mut trained = MctsAgent::with_net("trained", search, run.net.clone());
    let mut untrained = MctsAgent::with_net("untrained", search, run.snapshots[0].clone());
    let result = play_match(&game, &mut trained, &mut untrained, 40, 1, &mut seeded(6))?;
    let t = result.total();
    println!("trained vs untrained W/D/L {}/{}/{} (score {:.2})", t.wins, t.draws, t.losses, result.score_rate());
    Ok(())
}
