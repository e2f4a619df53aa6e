//! Transmission-aware cache placement for fog radio access networks.
//!
//! The crate models a set of base stations (BSs) with finite caches serving
//! users with heterogeneous file preferences, and places files so that the
//! users' average download delay is minimized. Two solvers are provided:
//!
//! - [`greedy`]: a centralized greedy over the partition matroid induced by
//!   the per-BS cache capacities (the objective is monotone submodular, so the
//!   greedy is within 1/2 of the optimum).
//! - [`bp`]: a distributed max-product belief-propagation solver on the
//!   factor graph of the problem, with per-BS message accounting.
//!
//! [`oracle`] contains brute-force references used by the test suites.

pub mod bp;
pub mod delay;
mod error;
pub mod greedy;
pub mod model;
pub mod oracle;
pub mod rates;
mod textio;

pub use error::{Error, Result};
