//! Analytical model of a blockchain radio access network.
//!
//! Access requests arrive as a Poisson stream, are packed into blocks mined
//! as a Poisson process, wait for `N` confirmations and are then served by one
//! of `s` access links. The crate provides
//!
//! * [`mining`]: block-time statistics and samplers,
//! * [`ctmc`]: the one-confirmation queueing chain, its steady state and the
//!   mean access latency for any `N`,
//! * [`bounds`]: Erlang-C based latency bounds,
//! * [`security`]: double-spend success probability and a race simulator,
//! * [`dessim`]: a discrete-event simulator of the whole workflow,
//! * [`tradeoff`]: the latency/security curve over `N`,
//! * [`cli`]: the `bran` command-line front end.
//!
//! Times are in units of the mean service time.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod ctmc;
pub mod dessim;
pub mod error;
pub mod mining;
pub mod rng;
pub mod security;
pub mod stats;
pub mod tradeoff;
pub mod validation;

pub use config::{AttackerProfile, ConfirmationPolicy, GiveUp, SystemConfig};
pub use error::{Error, Result};
