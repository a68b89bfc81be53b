//! Hex on an n x n rhombus. Player one connects the left and right edges,
//! player two connects top and bottom. Cell id = row * n + col.

use super::board::{BoardState, Cell, Game, GameResult, Player};

#[derive(Debug, Clone, Copy)]
pub struct Hex {
    pub size: usize,
}

impl Default for Hex {
    fn default() -> Self {
        Self { size: 5 }
    }
}

impl Hex {
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "hex board needs at least one cell");
        Self { size }
    }

    pub fn neighbors(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.size as isize;
        let (r, c) = ((cell / self.size) as isize, (cell % self.size) as isize);
        [(-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0)]
            .into_iter()
            .map(move |(dr, dc)| (r + dr, c + dc))
            .filter(move |(rr, cc)| *rr >= 0 && *rr < n && *cc >= 0 && *cc < n)
            .map(move |(rr, cc)| (rr * n + cc) as usize)
    }

    /// Whether `p` has a chain joining its two edges.
    pub fn connected(&self, cells: &[Cell], p: Player) -> bool {
        let n = self.size;
        let starts: Vec<usize> = match p {
            Player::One => (0..n).map(|r| r * n).collect(),
            Player::Two => (0..n).collect(),
        };
        let reached_goal = |cell: usize| match p {
            Player::One => cell % n == n - 1,
            Player::Two => cell / n == n - 1,
        };
        let mut seen = vec![false; n * n];
        let mut stack: Vec<usize> = Vec::new();
        for s in starts {
            if cells[s] == Cell::Stone(p) {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(u) = stack.pop() {
            if reached_goal(u) {
                return true;
            }
            for v in self.neighbors(u) {
                if !seen[v] && cells[v] == Cell::Stone(p) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        false
    }
}

impl Game for Hex {
    fn name(&self) -> &'static str {
        "hex"
    }

    fn num_moves(&self) -> usize {
        self.size * self.size
    }

    fn initial(&self) -> BoardState {
        BoardState::empty(self.size * self.size)
    }

    fn result(&self, state: &BoardState) -> Option<GameResult> {
        // only the player who just moved can have completed a chain
        let last = state.to_move.other();
        if self.connected(&state.cells, last) {
            return Some(GameResult::Win(last));
        }
        if self.connected(&state.cells, state.to_move) {
            return Some(GameResult::Win(state.to_move));
        }
        None
    }

    /// Player two sees the board transposed, so in the encoded frame the
    /// mover always joins the left and right edges.
    fn canonical_move(&self, state: &BoardState, mv: usize) -> usize {
        match state.to_move {
            Player::One => mv,
            Player::Two => (mv % self.size) * self.size + mv / self.size,
        }
    }

    fn encode(&self, state: &BoardState) -> Vec<f64> {
        let n = state.cells.len();
        let mut v = vec![0.0; 2 * n];
        for (i, c) in state.cells.iter().enumerate() {
            let j = self.canonical_move(state, i);
            match c {
                Cell::Stone(p) if *p == state.to_move => v[j] = 1.0,
                Cell::Stone(_) => v[n + j] = 1.0,
                Cell::Empty => {}
            }
        }
        v
    }

    fn render(&self, state: &BoardState) -> String {
        let mut out = String::new();
        for r in 0..self.size {
            out.push_str(&" ".repeat(r));
            for c in 0..self.size {
                out.push(match state.cells[r * self.size + c] {
                    Cell::Empty => '.',
                    Cell::Stone(Player::One) => 'X',
                    Cell::Stone(Player::Two) => 'O',
                });
                out.push(' ');
            }
            out.truncate(out.trim_end().len());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::board::enumerate_positions;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn encoding_is_color_symmetric() {
        // a player-two position is the transpose of the mirrored player-one position
        let h = Hex::new(3);
        let mut one = BoardState::empty(9);
        one.cells[1] = Cell::Stone(Player::One);
        one.cells[5] = Cell::Stone(Player::Two);
        one.to_move = Player::One;
        let mut two = BoardState::empty(9);
        two.cells[3] = Cell::Stone(Player::Two);
        two.cells[7] = Cell::Stone(Player::One);
        two.cells[0] = Cell::Stone(Player::One);
        two.to_move = Player::Two;
        let mut one_b = one.clone();
        one_b.cells[0] = Cell::Stone(Player::Two);
        one_b.to_move = Player::One;
        assert_eq!(h.encode(&one_b), h.encode(&two));
        for mv in 0..9 {
            assert_eq!(h.canonical_move(&two, h.canonical_move(&two, mv)), mv);
        }
        assert_eq!(h.canonical_move(&two, 1), 3);
    }

    #[test]
    fn random_playouts_always_have_one_winner() {
        let mut rng = seeded(17);
        for size in [3, 4, 5] {
            let game = Hex::new(size);
            for _ in 0..10_000 {
                let mut s = game.initial();
                let mut moves = 0;
                while game.result(&s).is_none() {
                    let legal = game.legal_moves(&s);
                    assert!(!legal.is_empty(), "hex cannot run out of moves without a winner");
                    s = game.play(&s, legal[rng.random_range(0..legal.len())]).unwrap();
                    moves += 1;
                }
                let winner = match game.result(&s).unwrap() {
                    GameResult::Win(p) => p,
                    GameResult::Draw => panic!("hex has no draws"),
                };
                assert!(game.connected(&s.cells, winner));
                assert!(!game.connected(&s.cells, winner.other()));
                assert!(moves <= size * size);
            }
        }
    }

    #[test]
    fn edges() {
        let game = Hex::new(3);
        // a straight row joins left and right for player one
        let mut s = game.initial();
        for mv in [3, 0, 4, 1, 5] {
            s = game.play(&s, mv).unwrap();
        }
        assert_eq!(game.result(&s), Some(GameResult::Win(Player::One)));
        // the anti-diagonal chain 2-4-6 connects top and bottom
        let mut cells = vec![Cell::Empty; 9];
        for c in [2, 4, 6] {
            cells[c] = Cell::Stone(Player::Two);
        }
        assert!(game.connected(&cells, Player::Two));
        assert!(!game.connected(&cells, Player::One));
    }

    #[test]
    fn neighbor_counts() {
        let game = Hex::new(5);
        assert_eq!(game.neighbors(0).count(), 2);
        assert_eq!(game.neighbors(4).count(), 3);
        assert_eq!(game.neighbors(12).count(), 6);
    }

    #[test]
    fn small_board_has_a_model_but_five_does_not() {
        assert!(enumerate_positions(&Hex::new(2), 1_000).is_some());
        assert!(enumerate_positions(&Hex::new(5), 200_000).is_none());
    }
}
