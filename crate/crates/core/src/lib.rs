pub mod agents;
pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod faults;
pub mod nn;
pub mod orchestrator;
pub mod rng;

pub use error::{Error, Result};
