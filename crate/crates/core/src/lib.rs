//! CAV-assisted emergency vehicle corridor clearance: simulator, controllers,
//! learning environment, and metrics.

pub mod controllers;
pub mod error;
pub mod metrics;
pub mod rl;
pub mod runner;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
