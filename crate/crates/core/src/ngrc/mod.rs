//! Next-generation reservoir computer.
//!
//! The total feature vector for one sample is laid out as
//!
//! ```text
//! [ u (d entries) | c | X (d_lin entries) | monomials of X, degree 2..=p ]
//! ```
//!
//! and the readout is a single linear map over it. The first `d` columns of
//! the trained readout form the control-effectiveness estimate `w_u`; the
//! remaining columns form the state readout `w_x`, so that
//! `Y_{i+1} = w_x * O_X + w_u * u`.

mod dataset;
mod features;
mod model;
pub mod ridge;

pub use dataset::{Rows, TrainingDataset};
pub use features::{
    assemble_features, build_linear_features, build_nonlinear_features, monomial_count,
    state_features, FeatureConfig, FeatureVector,
};
pub use model::{perturb_weights, predict, predict_unforced, train_ridge, NgrcModel};
pub use ridge::{SolveInfo, SolveMethod};
