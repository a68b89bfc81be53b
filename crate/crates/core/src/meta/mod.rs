//! Population methods and meta-learning.

pub mod evolve;
pub mod maml;
pub mod pbt;

pub use evolve::{evolve, EvolveConfig, EvolveRun, Individual};
pub use maml::{
    bandit_maml_train, maml_inner_adapt, maml_train, post_adaptation_loss, BanditFamily, BanditMamlConfig, LinearFamily,
    LinearTask, MamlConfig, MamlRun, TaskFamily,
};
pub use pbt::{log_spaced, pbt_train, replay_lineage, LineageEvent, PbtConfig, PbtEvent, PbtMember, PbtRun, TabularSetup};
