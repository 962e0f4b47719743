//! Achievable-rate analysis for interference-free wireless networks with
//! Rayleigh-fading links.
//!
//! - [`numerics`]: Lambert W, adaptive quadrature, grid-refined maximization.
//! - [`channel`]: single-link outage probabilities and capacity baselines.
//! - [`ptp`]: point-to-point fixed-rate and superposition throughput.
//! - [`netmodel`]: network graphs, cut enumeration, cut-set rates and bounds.
//! - [`flowopt`]: primal-dual flow optimization with queue-driven
//!   opportunistic routing.
//! - [`mcsim`]: seeded Monte Carlo simulation of the same quantities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod flowopt;
pub mod mcsim;
pub mod netmodel;
pub mod numerics;
pub mod ptp;

pub use error::{Error, Result};
