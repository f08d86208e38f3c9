use crate::ngrc::{predict, train_ridge, FeatureConfig, NgrcModel, TrainingDataset};
use crate::{Error, Result};

use super::metrics::rmse;

/// `{0} ∪ {10⁻¹², 10⁻¹¹, …, 10⁻¹, 1}`.
pub fn default_alpha_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((-12..=0).map(|k| 10f64.powi(k)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct AlphaChoice {
    pub alpha: f64,
    /// One-step test RMSE at `alpha`.
    pub rmse: f64,
    pub model: NgrcModel,
}

/// One-step prediction RMSE of `model` over the test rows of `data`.
pub fn test_rmse(model: &NgrcModel, data: &TrainingDataset) -> Result<f64> {
    let rows = data.test();
    let mut truth = Vec::with_capacity(rows.len() * model.config().d);
    let mut est = Vec::with_capacity(truth.capacity());
    for i in 0..rows.len() {
        let y = predict(model, &rows.states[i], &rows.perturbations[i])?;
        truth.extend_from_slice(&rows.targets[i]);
        est.extend(y);
    }
    rmse(&truth, &est)
}

/// Test RMSE for each α of `grid`, `None` where training failed.
pub fn alpha_profile(
    data: &TrainingDataset,
    grid: &[f64],
    config: &FeatureConfig,
) -> Vec<Option<(f64, NgrcModel)>> {
    grid.iter()
        .map(|&alpha| {
            let model = train_ridge(data, alpha, config).ok()?;
            let err = test_rmse(&model, data).ok()?;
            err.is_finite().then_some((err, model))
        })
        .collect()
}

/// Train at every α of `grid` and keep the one with the lowest one-step test
/// RMSE. Ties go to the smaller α.
pub fn grid_search_alpha(
    data: &TrainingDataset,
    grid: &[f64],
    config: &FeatureConfig,
) -> Result<AlphaChoice> {
    validate_grid(grid)?;
    if data.m_test() == 0 {
        return Err(Error::Config("α search needs at least one test row".into()));
    }
    let mut best: Option<AlphaChoice> = None;
    for (&alpha, entry) in grid.iter().zip(alpha_profile(data, grid, config)) {
        let Some((err, model)) = entry else { continue };
        let better = match &best {
            None => true,
            Some(b) => err < b.rmse || (err == b.rmse && alpha < b.alpha),
        };
        if better {
            best = Some(AlphaChoice { alpha, rmse: err, model });
        }
    }
    best.ok_or_else(|| Error::Training("training failed for every ridge parameter".into()))
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("α grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Config(format!("α grid values must lie in [0, 1], got {bad}")));
    }
    Ok(())
}
