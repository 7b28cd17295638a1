//! Round-synchronous simulation of broadcasting on multiple-access channels
//! under leaky-bucket and randomized adversaries.

pub mod adversary;
pub mod algo;
pub mod batch;
pub mod bounds;
pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod execution;
pub mod fixed;
pub mod metrics;
pub mod rng;
pub mod station;

pub use error::{ParseError, Result, SimError};
pub use fixed::Fixed;
