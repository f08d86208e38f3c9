//! Experiment harness: data generation, ridge-parameter search, error
//! metrics and the seeded sweeps behind every experiment CSV.

mod datagen;
mod metrics;
mod search;
mod sweep;

pub use datagen::{generate_dataset, record_trajectory, DataGenSpec, IcBox};
pub use metrics::{iterations_to_tolerance, rmse, window_rmse};
pub use search::{default_alpha_grid, grid_search_alpha, test_rmse, AlphaChoice};
pub use sweep::{
    gain_grid, run_control_task, run_control_traces, run_prediction_sweep, train_controller_model,
    ControlSweepSpec, ControlTask, PredictionSweepSpec, SweepCell, SweepResult, ARBITRARY_SWITCH, TRACE_GAINS,
    NOISE_LEVELS,
};
