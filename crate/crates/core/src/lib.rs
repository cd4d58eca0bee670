#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Secret sharing over noisy broadcast channels.
//!
//! The crate computes secret-sharing capacities and layered-secrecy rate
//! regions by recasting sharing requirements as secure-communication
//! requirements:
//!
//! * [`access_structure`]: monotone access structures and their antichain
//!   reductions.
//! * [`channel_models`]: discrete memoryless and Gaussian broadcast channels,
//!   exact mutual information, degradedness checks.
//! * [`compound_wiretap`]: the equivalent compound wiretap channel, its
//!   lower/upper bounds and the closed-form capacities.
//! * [`layered_region`]: rate regions with layered decoding and secrecy
//!   (DMC, scalar Gaussian, MIMO) and weighted boundary search.
//! * [`miso_reduction`]: multi-secret sharing over a MISO channel via virtual
//!   receivers and whitening.
//! * [`binning_simulator`]: small-blocklength superposition/random-binning
//!   codes with exact error probability and leakage.
//!
//! All information quantities are in bits.

pub mod access_structure;
pub mod binning_simulator;
pub mod channel_models;
pub mod compound_wiretap;
pub mod error;
pub mod grid;
pub mod info;
pub mod layered_region;
pub mod linalg;
pub mod miso_reduction;
pub mod schema;

pub use error::{Error, Result};
