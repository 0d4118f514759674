pub mod alternatives;
pub mod backtrace;
pub mod baseline;
pub mod cli;
pub mod engine;
pub mod explain;
pub mod error;
pub mod model;
pub mod reparam;
pub mod scenario;
pub mod tracing;

pub use error::{Error, Result};
