pub mod config;
pub mod embed;
pub mod enumerate;
pub mod error;
pub mod eval;
pub mod miner;
pub mod stl;
pub mod traj;
pub mod vecdb;

pub use error::{Error, Result};
