//! Trimmed Birkhoff sums for observables with a power singularity over
//! exponentially mixing systems, together with the normalizing constants and
//! reference laws needed to check their limit theorems by simulation.

pub mod dynsys;
pub mod error;
pub mod harness;
pub mod limits;
pub mod numeric;
pub mod observables;
pub mod ppp;
pub mod rng;
pub mod stats;
pub mod trimming;

pub use error::{Error, Result};
