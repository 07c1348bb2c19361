//! Dialogue state machine, command line and local HTTP API.

pub mod cli;
pub mod corpus;
pub mod http;
pub mod session;

pub use session::{Config, Reply, Service, ServiceError, SessionState};

/// Word vectors covering the sample package's tasks.
pub const SAMPLE_VECTORS: &str = include_str!("../data/vectors.txt");
