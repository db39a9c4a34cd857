//! Fixed-confidence best-arm identification for single-parameter
//! exponential-family bandits.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It provides:
//!
//! - [`model`]: reward models, their divergences on the mean scale, reward
//!   simulation and Jeffreys-posterior sampling.
//! - [`characteristic`]: the transportation costs and the solvers for the
//!   optimal allocation, the optimal characteristic time, the fixed-leader
//!   time and the balanced time attained by the best-challenger rule.
//! - [`policy`]: sampling rules (best challenger with Thompson exploration,
//!   round robin, D-tracking Track-and-Stop, a top-two baseline).
//! - [`stopping`]: Chernoff's generalized likelihood ratio stopping rule.
//! - [`run`]: the select/observe/stop loop shared by traces and experiments.
//!
//! Arm indices are zero-based everywhere.
#![no_std]
#![deny(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod characteristic;
mod error;
pub mod history;
pub mod model;
pub mod policy;
pub mod run;
pub mod stopping;
pub mod trace;
mod weights;

pub use characteristic::CharacteristicTimes;
pub use error::{Error, Result};
pub use history::HistoryState;
pub use model::{ArmObservations, Instance, ModelKind};
pub use policy::{PolicyKind, Selection};
pub use stopping::{StoppingDecision, ThresholdKind};
pub use weights::Weights;

/// Default tolerance for the characteristic-time solvers.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Iteration cap shared by every bisection in the crate.
pub const MAX_BISECTIONS: usize = 200;
