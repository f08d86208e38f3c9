//! Data-driven control of discrete chaotic maps.
//!
//! A next-generation reservoir computer (a ridge-regression readout over a
//! constant, the raw observables and their quadratic monomials) is trained on
//! a handful of randomly perturbed samples of a plant. Its learned one-step
//! model is then inverted by a feedback-linearizing control law that drives
//! the plant onto unstable fixed points, periodic orbits or arbitrary targets.
//!
//! Modules:
//! - [`ngrc`]: feature construction, ridge training, prediction.
//! - [`plant`]: the controlled, noisy Hénon map and the generic plant contract.
//! - [`control`]: tracking error, control law, targets and the closed loop.
//! - [`harness`]: data generation, α search, RMSE statistics and sweeps.
//! - [`cli`]: configuration and command dispatch for the `ngrc-control` binary.

pub mod cli;
pub mod control;
pub mod csv;
pub mod error;
pub mod harness;
pub mod ngrc;
pub mod plant;
pub mod rng;

pub use error::{Error, Result};
