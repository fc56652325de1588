#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Water-quality state-space modeling and model-predictive booster control
//! for drinking-water distribution networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`network`] parses network descriptions and hydraulic schedules and
//!   builds the incidence, selection and booster-placement matrices.
//! * [`dynamics`] discretizes pipes with the Lax-Wendroff scheme and assembles
//!   the sparse time-varying linear model `x(t+Δt) = A x(t) + B u(t)`.
//! * [`mpc`] builds the augmented prediction system and computes booster
//!   injections with the closed-form law or a constrained QP.
//! * [`scenario`] runs closed-loop experiments with uncertainty injection and
//!   compares MPC against a rule-based baseline.
//!
//! Data-parallel loops (per-period assembly, impulse responses, scenario
//! batches) go through [`par`], which uses rayon when the `parallel` feature
//! is enabled and falls back to plain iterators otherwise.

pub mod dynamics;
pub mod error;
pub mod mpc;
pub mod network;
pub mod par;
pub mod scenario;
pub mod units;

pub use error::{Error, ErrorKind, Result};
