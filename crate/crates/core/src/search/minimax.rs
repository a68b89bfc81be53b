//! Exhaustive minimax, scored from player one's perspective.

use std::collections::HashMap;

use crate::envs::{BoardState, Game, Player};

/// Depth-limited minimax. Player one maximizes, player two minimizes;
/// finished positions return their score, depth 0 returns `eval`.
pub fn minimax_value<G: Game>(game: &G, state: &BoardState, depth: usize, eval: &dyn Fn(&BoardState) -> f64) -> f64 {
    if let Some(r) = game.result(state) {
        return r.score_for(Player::One);
    }
    if depth == 0 {
        return eval(state);
    }
    let children = game
        .legal_moves(state)
        .into_iter()
        .map(|mv| game.play(state, mv).expect("legal move"))
        .map(|next| minimax_value(game, &next, depth - 1, eval));
    match state.to_move {
        Player::One => children.fold(f64::NEG_INFINITY, f64::max),
        Player::Two => children.fold(f64::INFINITY, f64::min),
    }
}

/// Full-depth minimax with a position cache, for games small enough to
/// solve outright.
#[derive(Debug, Clone)]
pub struct MinimaxSolver<G> {
    game: G,
    cache: HashMap<BoardState, f64>,
}

impl<G: Game> MinimaxSolver<G> {
    pub fn new(game: G) -> Self {
        Self {
            game,
            cache: HashMap::new(),
        }
    }

    /// Game-theoretic value for player one.
    pub fn value(&mut self, state: &BoardState) -> f64 {
        if let Some(v) = self.cache.get(state) {
            return *v;
        }
        let v = match self.game.result(state) {
            Some(r) => r.score_for(Player::One),
            None => {
                let sign = state.to_move.sign();
                let mut best = f64::NEG_INFINITY;
                for mv in self.game.legal_moves(state) {
                    let next = self.game.play(state, mv).expect("legal move");
                    best = best.max(sign * self.value(&next));
                }
                sign * best
            }
        };
        self.cache.insert(state.clone(), v);
        v
    }

    /// Value of each legal move for the side to move.
    pub fn move_values(&mut self, state: &BoardState) -> Vec<(usize, f64)> {
        let sign = state.to_move.sign();
        self.game
            .legal_moves(state)
            .into_iter()
            .map(|mv| {
                let next = self.game.play(state, mv).expect("legal move");
                (mv, sign * self.value(&next))
            })
            .collect()
    }

    /// Moves achieving the best value for the side to move, ascending.
    pub fn optimal_moves(&mut self, state: &BoardState) -> Vec<usize> {
        let values = self.move_values(state);
        let best = values.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
        values.into_iter().filter(|(_, v)| *v == best).map(|(m, _)| m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::TicTacToe;

    fn terminal_only(_: &BoardState) -> f64 {
        0.0
    }

    #[test]
    fn depth_zero_returns_the_evaluation() {
        let g = TicTacToe;
        assert_eq!(minimax_value(&g, &g.initial(), 0, &|_| 0.37), 0.37);
    }

    #[test]
    fn empty_board_is_a_draw() {
        let g = TicTacToe;
        assert_eq!(minimax_value(&g, &g.initial(), 9, &terminal_only), 0.0);
        assert_eq!(MinimaxSolver::new(g).value(&g.initial()), 0.0);
    }

    #[test]
    fn immediate_win_is_found() {
        let g = TicTacToe;
        let s = TicTacToe::position("xx. oo. ...");
        assert_eq!(s.to_move, Player::One);
        assert_eq!(minimax_value(&g, &s, 1, &terminal_only), 1.0);
        let mut solver = MinimaxSolver::new(g);
        assert_eq!(solver.optimal_moves(&s), vec![2]);
    }

    #[test]
    fn cached_solver_agrees_with_plain_search() {
        let g = TicTacToe;
        let mut solver = MinimaxSolver::new(g);
        for layout in ["x.. .o. ...", "xo. ... ...", "x.. ... ..o", "xo. x.. ..."] {
            let s = TicTacToe::position(layout);
            assert_eq!(solver.value(&s), minimax_value(&g, &s, 9, &terminal_only), "{layout}");
        }
    }
}
