//! Random trees as stopped Crump-Mode-Jagers branching processes: simulation,
//! exact and numeric asymptotics, and the harness that compares the two.

pub mod dist;
pub mod error;
pub mod exact;
pub mod models;
pub mod protected;
pub mod sim;
pub mod theory;
pub mod verify;
pub mod solve;

pub use error::{Error, Result};
