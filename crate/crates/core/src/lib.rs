//! Gradient coding with stochastic block codes.
//!
//! A gradient code assigns `k` functions to `k` worker nodes through a binary
//! function-assignment matrix `G` (column `j` lists what node `j` sums) and
//! recovers an approximation of the total from whichever nodes finish. This
//! crate builds the stochastic block code family (with fractional repetition
//! and Bernoulli codes as special cases), decodes under random and adversarial
//! straggler patterns, evaluates the closed-form error bounds for stochastic
//! block decoding, and runs seeded Monte Carlo sweeps over all of it.
//!
//! All indices are 0-based.

pub mod bounds;
pub mod cli;
pub mod codes;
pub mod decoding;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod seeding;
pub mod stragglers;

pub use codes::{AssignmentMatrix, BlockLayout, CodeFamily, CodeSpec};
pub use decoding::{DecoderKind, DecodingVector};
pub use error::{Error, Result};
pub use numerics::Matrix;
pub use stragglers::{BlockPartition, StragglerPattern};
