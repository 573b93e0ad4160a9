//! Joint active and passive beamforming for IRS-assisted cell-free MIMO downlink.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: geometry, steering vectors and random channel realizations;
//! - [`model`]: configuration, beamformer/phase containers, sum-rate;
//! - [`fp`]: fractional-programming surrogates and the closed-form auxiliary updates;
//! - [`tx`]: per-BS power-constrained transmit beamforming via the Lagrangian dual;
//! - [`irs`]: the constant-modulus QP for the reflection coefficients and its solvers;
//! - [`pipeline`]: the outer alternating optimizer and Monte-Carlo orchestration;
//! - [`exp`]: the JSON-driven experiment runner behind the `cellfree-irs` binary.

// NaN-rejecting `!(x > 0.0)` checks and index loops over parallel arrays are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod error;
pub mod exp;
pub mod fp;
pub mod irs;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod seeds;
pub mod tx;

pub use error::{Error, Result};
