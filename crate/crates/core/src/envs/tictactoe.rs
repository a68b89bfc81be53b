//! Tic-tac-toe on a 3x3 board; cells are numbered row-major 0..9.

use super::board::{BoardState, Cell, Game, GameResult, Player};

const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

#[derive(Debug, Clone, Copy, Default)]
pub struct TicTacToe;

impl TicTacToe {
    pub fn winner(cells: &[Cell]) -> Option<Player> {
        LINES.iter().find_map(|[a, b, c]| match cells[*a] {
            Cell::Stone(p) if cells[*b] == cells[*a] && cells[*c] == cells[*a] => Some(p),
            _ => None,
        })
    }

    /// Builds a position from a 9-character string of `x`, `o` and `.`.
    pub fn position(layout: &str) -> BoardState {
        let cells: Vec<Cell> = layout
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                'x' | 'X' => Cell::Stone(Player::One),
                'o' | 'O' => Cell::Stone(Player::Two),
                _ => Cell::Empty,
            })
            .collect();
        assert_eq!(cells.len(), 9, "tic-tac-toe layout needs 9 cells");
        let mut s = BoardState {
            cells,
            to_move: Player::One,
        };
        if s.count(Player::One) > s.count(Player::Two) {
            s.to_move = Player::Two;
        }
        s
    }
}

impl Game for TicTacToe {
    fn name(&self) -> &'static str {
        "tictactoe"
    }

    fn num_moves(&self) -> usize {
        9
    }

    fn initial(&self) -> BoardState {
        BoardState::empty(9)
    }

    fn result(&self, state: &BoardState) -> Option<GameResult> {
        if let Some(p) = Self::winner(&state.cells) {
            Some(GameResult::Win(p))
        } else if state.cells.iter().all(|c| *c != Cell::Empty) {
            Some(GameResult::Draw)
        } else {
            None
        }
    }

    fn render(&self, state: &BoardState) -> String {
        let mut out = String::new();
        for r in 0..3 {
            for c in 0..3 {
                out.push(match state.cells[r * 3 + c] {
                    Cell::Empty => '.',
                    Cell::Stone(Player::One) => 'X',
                    Cell::Stone(Player::Two) => 'O',
                });
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::board::{enumerate_positions, game_graph_model, GameEnv};
    use crate::envs::Environment;
    use crate::rng::seeded;

    /// Legal positions by brute force over all 3^9 fillings, independent of
    /// the move generator: counts must be consistent, at most one side can
    /// have a line, and the side with a line must have moved last.
    fn brute_force_legal_positions() -> usize {
        let mut count = 0;
        for code in 0..3u32.pow(9) {
            let mut cells = [Cell::Empty; 9];
            let mut rest = code;
            for cell in cells.iter_mut() {
                *cell = match rest % 3 {
                    0 => Cell::Empty,
                    1 => Cell::Stone(Player::One),
                    _ => Cell::Stone(Player::Two),
                };
                rest /= 3;
            }
            let xs = cells.iter().filter(|c| **c == Cell::Stone(Player::One)).count();
            let os = cells.iter().filter(|c| **c == Cell::Stone(Player::Two)).count();
            if !(xs == os || xs == os + 1) {
                continue;
            }
            let line = |p| LINES.iter().any(|l| l.iter().all(|i| cells[*i] == Cell::Stone(p)));
            let (x_line, o_line) = (line(Player::One), line(Player::Two));
            if x_line && o_line {
                continue;
            }
            if x_line && xs != os + 1 {
                continue;
            }
            if o_line && xs != os {
                continue;
            }
            count += 1;
        }
        count
    }

    #[test]
    fn reachable_positions_match_brute_force() {
        let reachable = enumerate_positions(&TicTacToe, 100_000).unwrap();
        assert!(reachable.len() <= 19_683);
        assert_eq!(reachable.len(), brute_force_legal_positions());
        assert_eq!(reachable.len(), 5478);
        assert!(reachable.iter().all(BoardState::is_consistent));
    }

    #[test]
    fn empty_board() {
        let env = GameEnv::new(TicTacToe);
        let s = env.reset(&mut seeded(0));
        assert_eq!(s.state.to_move, Player::One);
        assert!(s.state.cells.iter().all(|c| *c == Cell::Empty));
        assert_eq!(s.legal_actions.len(), 9);
    }

    #[test]
    fn wins_and_draws() {
        let won = TicTacToe::position("xxx oo. ...");
        assert_eq!(TicTacToe.result(&won), Some(GameResult::Win(Player::One)));
        let draw = TicTacToe::position("xox xoo oxx");
        assert_eq!(TicTacToe.result(&draw), Some(GameResult::Draw));
        assert!(TicTacToe.legal_moves(&draw).is_empty());
        assert!(TicTacToe.play(&won, 5).is_err());
    }

    #[test]
    fn step_rewards_and_illegal_moves() {
        let env = GameEnv::new(TicTacToe);
        let mut rng = seeded(0);
        let s = TicTacToe::position("xx. oo. ...");
        let win = env.step(&s, 2, &mut rng).unwrap();
        assert!(win.terminal);
        assert_eq!(win.reward, 1.0);
        assert!(env.step(&s, 0, &mut rng).is_err());
        let s = TicTacToe::position("xx. oo. x..");
        let loss = env.step(&s, 5, &mut rng).unwrap();
        assert_eq!(loss.reward, -1.0);
    }

    #[test]
    fn afterstate_model() {
        let (mdp, positions) = game_graph_model(&TicTacToe, 100_000).unwrap();
        assert_eq!(mdp.num_states(), 5478);
        assert_eq!(positions[0], TicTacToe.initial());
        assert!(mdp.is_deterministic());
        let terminal = (0..mdp.num_states()).filter(|s| mdp.is_terminal(*s)).count();
        assert_eq!(terminal, 958);
    }

    #[test]
    fn encoding_is_from_the_movers_view() {
        let s = TicTacToe::position("x.. ... ...");
        let v = TicTacToe.encode(&s);
        assert_eq!(v.len(), 18);
        assert_eq!(v[9], 1.0); // x is the opponent of o, who moves
        assert_eq!(v[0], 0.0);
    }
}
