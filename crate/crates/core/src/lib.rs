//! Cellular automata as single-player games, local forward-model learning,
//! and rolling horizon planning with learned models.

pub mod agents;
pub mod ca;
pub mod error;
pub mod experiments;
pub mod format;
pub mod game;
pub mod learners;
pub mod ntbea;
pub mod seed;

pub use error::{Error, Result};
