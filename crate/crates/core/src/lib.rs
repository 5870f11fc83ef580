//! Discrete-event-system automata as reinforcement-learning environments.
//!
//! Plants and restrictions are modelled as deterministic automata with
//! controllable and uncontrollable events, composed into a closed loop, then
//! trained with tabular Q-learning or a small deep Q-network. See the
//! `examples/` directory of this crate for one runnable program per
//! capability.

pub mod automata;
pub mod bundles;
pub mod cli;
pub mod deepq;
pub mod environment;
pub mod error;
pub mod model_io;
pub mod policy;
pub mod tabular;

pub use automata::{compose, compose_all, Event, EventId, Fsm, FsmBuilder, ModelError, StateId, Transition};
pub use environment::{ActionSets, Environment, ProbMap, RewardMap, StepResult, Termination};
pub use error::{NetError, TrainError};
pub use model_io::{ModelDocument, ParseError, TrainingConfig};
pub use policy::{QTable, Rng};
