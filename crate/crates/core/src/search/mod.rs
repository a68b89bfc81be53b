//! Two-player zero-sum planning: minimax, Monte Carlo tree search and
//! self-play training of a dual-headed network.

pub mod arena;
pub mod mcts;
pub mod minimax;
pub mod net;
pub mod selfplay;

pub use arena::{play_match, Agent, MatchResult, MctsAgent, MinimaxAgent, RandomAgent, Tally};
pub use mcts::{mcts_search, puct_score, uct_score, Dirichlet, Leaf, MctsConfig, SearchResult, Selection, Tree};
pub use minimax::{minimax_value, MinimaxSolver};
pub use net::DualHeadNet;
pub use selfplay::{self_play_train, ExampleTriple, IterationMetrics, SelfPlayConfig, SelfPlayRun};
