//! Finite-key security analysis for one-decoy reference-frame-independent
//! quantum key distribution.
//!
//! - [`statmodel`]: analytic channel model and expected tallies
//! - [`finitekey`]: Hoeffding intervals and decoy-state bounds
//! - [`security`]: C, Eve's information, key rates, misalignment estimate
//! - [`optimizer`]: genetic-algorithm and grid search over operating points
//! - [`mcoracle`]: pulse-level Monte Carlo of a session
//! - [`dataset`] and [`cli`]: record files, bundled data and command drivers

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod error;
pub mod finitekey;
pub mod mcoracle;
pub mod optimizer;
pub mod security;
pub mod statmodel;

pub use error::{Error, Result};
pub use finitekey::{DecoyBounds, EpsilonBudget};
pub use security::SecurityResult;
pub use statmodel::{
    BasisPair, ChannelParams, Intensity, ProtocolParams, SessionParams, TallyTable,
};
