//! Truncated semiring and neural propagation over knowledge graphs.

pub mod cli;
pub mod error;
pub mod kg;
pub mod neural;
pub mod oracle;
pub mod semiring;
pub mod truncated;

pub use error::{Error, Result};
