//! A desk-scale laboratory for Gaussian-process bandit algorithms on finite
//! domains.
//!
//! The crate provides exact GP posteriors with cheap sequential updates,
//! Thompson-sampling and UCB arm selection, maximum-information-gain curves,
//! evaluators for second-moment and lenient regret bounds, a two-armed
//! lower-bound instance with heavy-tailed lock-in behaviour, and a
//! deterministic replication harness. Everything is driven either through
//! the library API (see `examples/`) or the thin `gpbandit` binary.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod gp;
pub mod info_gain;
pub mod kernel;
pub mod lower_bound;
pub mod output;
pub mod policy;
pub mod regret;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
