//! Deterministic desk-scale reinforcement learning.
//!
//! Every stochastic routine takes an explicitly seeded generator from
//! [`rng`]; identical seeds give bit-identical results.

pub mod cfr;
pub mod dist;
pub mod dqn;
pub mod envs;
pub mod harness;
pub mod io;
pub mod error;
pub mod mdp;
pub mod meta;
pub mod neural;
pub mod policy;
pub mod rng;
pub mod search;
pub mod tabular;

pub use error::{Result, RlError};
