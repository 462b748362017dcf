//! Value-based deep RL for the high-level driving decisions.

use thiserror::Error;

pub mod agent;
pub mod checkpoint;
pub mod grid;
pub mod highway;
pub mod net;
pub mod replay;
pub mod train;

pub use agent::{compute_targets, epsilon_at, epsilon_greedy, sync_target, train_step, Agent, AgentConfig, Algorithm, TargetUpdate};
pub use net::{argmax, Mlp};
pub use replay::{ReplayBuffer, Transition};

#[derive(Debug, Error)]
pub enum DrlError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("input has {got} entries, network expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite training loss {loss}")]
    NonFinite { loss: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("simulation: {0}")]
    Simulation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
