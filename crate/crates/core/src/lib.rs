//! Finite-key analysis of two-photon twin-field QKD: channel statistics,
//! decoy-state estimation, an event-level Monte Carlo oracle, benchmark
//! diagnostics and a link/network planner.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel_model;
pub mod diagnostics;
pub mod error;
pub mod event_sim;
pub mod finite_stats;
pub mod keyrate;
pub mod planner;
pub mod quadrature;

pub use channel_model::{
    Intensity, LinkGeometry, MxForm, ObservedCounts, SourceSetting, SystemParams,
};
pub use error::{Error, Result, Side};
pub use finite_stats::{compose_epsilons, EpsilonBudget};
pub use keyrate::{evaluate_link, DecoyEstimates, KeyRateResult, Mode};
