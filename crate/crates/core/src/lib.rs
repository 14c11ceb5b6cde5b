//! Deep Q-learning for HP-model protein folding on the 2D square lattice.

pub mod benchmark;
pub mod checkpoint;
pub mod confdb;
pub mod dqn;
pub mod encoding;
pub mod error;
pub mod lattice;
pub mod nn;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
