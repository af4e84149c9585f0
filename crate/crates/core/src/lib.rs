//! Mining attribute-based access control policies from operation logs.
//!
//! The [`abac`] module defines the policy language and its meaning,
//! [`log`] and [`metrics`] the mining inputs and quality measures,
//! [`miner`] the seeded generalize/merge/simplify miner and [`atm`] the
//! author-topic-model miner. [`synth`] and [`eval`] generate benchmarks and
//! compare policies; [`format`] reads and writes the text formats.

pub mod abac;
pub mod atm;
pub mod error;
pub mod eval;
pub mod format;
pub mod log;
pub mod metrics;
pub mod miner;
pub mod synth;

pub use error::{Error, Result};
