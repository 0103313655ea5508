//! Deterministic compressed sensing toolkit.
//!
//! Builds circulant-block sensing matrices from trace-exponential sums over
//! GF(p^s), applies them in O(n log n) through FFTs, recovers sparse signals
//! with six algorithms, and runs seeded Monte-Carlo benchmark experiments.

pub mod bench;
pub mod config;
pub mod error;
pub mod galois;
pub mod matgen;
pub mod matio;
pub mod operator;
pub mod plot;
pub mod recover;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
