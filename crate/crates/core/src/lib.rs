//! Slack-free step-penalty VQE for constrained binary optimization.
//!
//! Multi-dimensional knapsack instances are compiled into classical losses over
//! bitstrings ([`formulation`]), a single-layer RY/CZ ansatz is simulated on a
//! dense real statevector ([`simulator`]), sampled losses are turned into
//! finite-sampling or CVaR objectives ([`estimators`]) and minimized with
//! Powell's method over random restarts ([`vqe`]). [`harness`] drives sweeps
//! and writes reports.

pub mod error;
pub mod estimators;
pub mod formulation;
pub mod harness;
pub mod instances;
pub mod simulator;
pub mod vqe;

pub use error::{Error, Result};
