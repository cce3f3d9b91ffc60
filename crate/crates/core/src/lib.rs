//! Simulation and analysis toolkit for cavity-enhanced atomic frequency comb
//! (AFC) quantum memories.
//!
//! The crate computes the complex reflection response of an absorbing comb
//! inside a two-mirror crystal cavity, propagates pulses to obtain echoes and
//! storage efficiencies. Time-bin qubit fidelity and heralded g² after storage
//! are computed on top of that, with tomography in [`tomography`].

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod cavity;
pub mod error;
pub mod figures;
pub mod photon_stats;
pub mod pulse_engine;
pub mod scenario;
pub mod spectral_medium;
pub mod timebin_qubit;
pub mod tomography;
pub mod transform;

pub use error::{Error, Result};
