use thiserror::Error;

use crate::automata::StateId;
use crate::environment::EnvError;
use crate::policy::PolicyError;

/// Failures of the function approximator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("state id {state} is out of range for a net over {num_states} states")]
    StateOutOfRange { state: StateId, num_states: usize },
    #[error("network shapes differ: {0} vs {1}")]
    ShapeMismatch(String, String),
    #[error("bad parameter dump: {0}")]
    BadDump(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("invalid training config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("value iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
}
