//! Seeded sweeps. Every trial draws from a child stream keyed by the master
//! seed and the trial's coordinates, so results do not depend on the number
//! of threads or the order trials finish in.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{run_closed_loop, ControlTrace, ControllerConfig, TargetTrajectory};
use crate::csv;
use crate::ngrc::{perturb_weights, FeatureConfig, NgrcModel};
use crate::plant::{fixed_points, period4_orbit, Henon, HenonParams, NoiseSpec, PlantState};
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

use super::datagen::{generate_dataset, DataGenSpec};
use super::metrics::window_rmse;
use super::search::{alpha_profile, grid_search_alpha, validate_grid};

/// Noise levels of the robustness experiments.
pub const NOISE_LEVELS: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

/// Gains used for example traces.
pub const TRACE_GAINS: [f64; 4] = [0.0, 0.3, 0.6, 0.9];

/// Iteration at which the arbitrary task switches from -1.5 to +1.5.
pub const ARBITRARY_SWITCH: usize = 100;

/// 81 gains evenly spaced over [-1.2, 1.2] (step 0.03, exact 0 included).
pub fn gain_grid() -> Vec<f64> {
    (0..81).map(|i| (f64::from(i) - 40.0) * 3.0 / 100.0).collect()
}

/// Named control tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlTask {
    /// From the inner fixed point to the outer one.
    #[serde(rename = "pu1-pu2")]
    Pu1ToPu2,
    /// From (-1, 0) onto the period-4 orbit.
    Period4,
    /// From (0, 0) to x = -1.5, then to x = +1.5 at [`ARBITRARY_SWITCH`].
    Arbitrary,
}

impl ControlTask {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Pu1ToPu2 => "pu1-pu2",
            Self::Period4 => "period4",
            Self::Arbitrary => "arbitrary",
        }
    }

    pub fn initial_state(&self, params: &HenonParams) -> Result<PlantState> {
        Ok(match self {
            Self::Pu1ToPu2 => fixed_points(params)?.0,
            Self::Period4 => PlantState::new(-1.0, 0.0),
            Self::Arbitrary => PlantState::new(0.0, 0.0),
        })
    }

    pub fn target(&self, params: &HenonParams) -> Result<TargetTrajectory> {
        match self {
            Self::Pu1ToPu2 => Ok(TargetTrajectory::Constant(fixed_points(params)?.1.x)),
            Self::Period4 => {
                TargetTrajectory::periodic(period4_orbit().iter().map(|p| p.x).collect(), 0)
            }
            Self::Arbitrary => TargetTrajectory::piecewise(vec![(0, -1.5), (ARBITRARY_SWITCH, 1.5)]),
        }
    }
}

impl std::str::FromStr for ControlTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pu1-pu2" => Ok(Self::Pu1ToPu2),
            "period4" => Ok(Self::Period4),
            "arbitrary" => Ok(Self::Arbitrary),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

/// One aggregated sweep cell (one CSV row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub sweep: String,
    /// M_train for prediction sweeps, K for control sweeps.
    pub cell_param: f64,
    pub sigma_d: f64,
    pub sigma_dw: f64,
    /// Mean over non-escaped trials; NaN when every trial escaped.
    pub mean_rmse: f64,
    pub std_rmse: f64,
    /// Configured trial count.
    pub trials: usize,
    pub escaped: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        csv::write_sweep(&mut s, &self.cells);
        s
    }

    pub fn find(&self, sweep: &str, cell_param: f64, sigma_d: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| {
            c.sweep == sweep && (c.cell_param - cell_param).abs() < 1e-12 && c.sigma_d == sigma_d
        })
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Most frequent value, ties to the smallest.
fn mode(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = (f64::NAN, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|v| **v == sorted[i]).count();
        if j > best.1 {
            best = (sorted[i], j);
        }
        i += j;
    }
    best.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSweepSpec {
    pub m_train_grid: Vec<usize>,
    pub noise_levels: Vec<f64>,
    pub trials: usize,
    /// Template for generation; `m_train` and `sigma_d` are set per cell.
    pub data: DataGenSpec,
    pub alpha_grid: Vec<f64>,
    pub params: HenonParams,
    pub features: FeatureConfig,
}

impl Default for PredictionSweepSpec {
    fn default() -> Self {
        Self {
            m_train_grid: (1..=20).collect(),
            noise_levels: NOISE_LEVELS.to_vec(),
            trials: 100,
            data: DataGenSpec::default(),
            alpha_grid: super::search::default_alpha_grid(),
            params: HenonParams::default(),
            features: FeatureConfig::henon(),
        }
    }
}

/// One-step prediction RMSE against training-set size and noise.
///
/// Each cell yields two rows: `predict` (α re-optimized per trial; the
/// `alpha` column is the most frequently chosen value) and `predict-curve`
/// (the single α with the lowest mean RMSE over the cell's trials).
pub fn run_prediction_sweep(spec: &PredictionSweepSpec, seed: u64) -> Result<SweepResult> {
    validate_grid(&spec.alpha_grid)?;
    if spec.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for (ni, &sigma_d) in spec.noise_levels.iter().enumerate() {
        for (mi, &m_train) in spec.m_train_grid.iter().enumerate() {
            let cell = (ni * spec.m_train_grid.len() + mi) as u64;
            let data_spec = DataGenSpec {
                m_train,
                sigma_d,
                ..spec.data
            };
            let trials: Vec<Vec<Option<f64>>> = (0..spec.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut r = rng::child(seed, "predict", &[cell, t]);
                    let data = generate_dataset(&data_spec, &spec.params, &mut r)?;
                    Ok(alpha_profile(&data, &spec.alpha_grid, &spec.features)
                        .into_iter()
                        .map(|e| e.map(|(err, _)| err))
                        .collect())
                })
                .collect::<Result<_>>()
                .map_err(|e| cell_error(e, m_train, sigma_d))?;

            let mut best_errs = Vec::with_capacity(trials.len());
            let mut best_alphas = Vec::with_capacity(trials.len());
            for profile in &trials {
                let mut best: Option<(f64, f64)> = None;
                for (&alpha, err) in spec.alpha_grid.iter().zip(profile) {
                    let Some(err) = *err else { continue };
                    if best.is_none_or(|(b, a)| err < b || (err == b && alpha < a)) {
                        best = Some((err, alpha));
                    }
                }
                let (err, alpha) = best.ok_or_else(|| {
                    Error::Training(format!(
                        "every α failed (M_train = {m_train}, σ_d = {sigma_d})"
                    ))
                })?;
                best_errs.push(err);
                best_alphas.push(alpha);
            }
            let (mean, std) = mean_std(&best_errs);
            cells.push(SweepCell {
                sweep: "predict".into(),
                cell_param: m_train as f64,
                sigma_d,
                sigma_dw: 0.0,
                mean_rmse: mean,
                std_rmse: std,
                trials: spec.trials,
                escaped: 0,
                alpha: mode(&best_alphas),
            });

            let mut curve: Option<(f64, f64, f64)> = None;
            for (k, &alpha) in spec.alpha_grid.iter().enumerate() {
                let errs: Option<Vec<f64>> = trials.iter().map(|p| p[k]).collect();
                let Some(errs) = errs else { continue };
                let (m, s) = mean_std(&errs);
                if curve.is_none_or(|(bm, _, ba)| m < bm || (m == bm && alpha < ba)) {
                    curve = Some((m, s, alpha));
                }
            }
            if let Some((m, s, alpha)) = curve {
                cells.push(SweepCell {
                    sweep: "predict-curve".into(),
                    cell_param: m_train as f64,
                    sigma_d,
                    sigma_dw: 0.0,
                    mean_rmse: m,
                    std_rmse: s,
                    trials: spec.trials,
                    escaped: 0,
                    alpha,
                });
            }
        }
    }
    Ok(SweepResult { cells })
}

fn cell_error(e: Error, m_train: usize, sigma_d: f64) -> Error {
    match e {
        Error::Generation { .. } | Error::Training(_) => Error::Training(format!(
            "cell M_train = {m_train}, σ_d = {sigma_d}: {e}"
        )),
        other => other,
    }
}

/// Generate noiseless data, pick α on the test split and return the model.
pub fn train_controller_model(
    data: &DataGenSpec,
    params: &HenonParams,
    alpha_grid: &[f64],
    features: &FeatureConfig,
    rng: &mut StreamRng,
) -> Result<NgrcModel> {
    let dataset = generate_dataset(data, params, rng)?;
    Ok(grid_search_alpha(&dataset, alpha_grid, features)?.model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSweepSpec {
    pub label: String,
    pub task: ControlTask,
    pub gains: Vec<f64>,
    pub sigma_d: f64,
    pub sigma_dw: f64,
    pub n_iters: usize,
    pub trials: usize,
    /// Inclusive iteration window for the RMSE.
    pub window: (usize, usize),
    /// Training-data generation for each trial's model.
    pub data: DataGenSpec,
    pub alpha_grid: Vec<f64>,
    pub params: HenonParams,
    pub features: FeatureConfig,
}

impl Default for ControlSweepSpec {
    fn default() -> Self {
        Self {
            label: "sweep-k".into(),
            task: ControlTask::Pu1ToPu2,
            gains: gain_grid(),
            sigma_d: 1e-3,
            sigma_dw: 0.0,
            n_iters: 200,
            trials: 100,
            window: (50, 150),
            data: DataGenSpec::default(),
            alpha_grid: super::search::default_alpha_grid(),
            params: HenonParams::default(),
            features: FeatureConfig::henon(),
        }
    }
}

/// Closed-loop RMSE between x and x_des over `window`, per gain.
///
/// Trial `t` trains its model from the stream `("control-model", t)`, which
/// is shared by every gain and noise level. Weight perturbations and plant
/// noise come from a stream keyed by (σ_d, σ_dW, gain index, trial). Runs
/// that escape before the window ends are counted in `escaped` and left out
/// of the mean.
pub fn run_control_task(spec: &ControlSweepSpec, seed: u64) -> Result<SweepResult> {
    validate_grid(&spec.alpha_grid)?;
    if spec.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if spec.window.1 < spec.window.0 || spec.window.1 >= spec.n_iters {
        return Err(Error::Config(format!(
            "RMSE window {:?} must lie inside 0..{}",
            spec.window, spec.n_iters
        )));
    }
    let noise = NoiseSpec::new(spec.sigma_d)?;
    let plant = Henon::new(spec.params, noise);
    let s0 = spec.task.initial_state(&spec.params)?;
    let target = spec.task.target(&spec.params)?;

    let models: Vec<NgrcModel> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::child(seed, "control-model", &[t]);
            train_controller_model(&spec.data, &spec.params, &spec.alpha_grid, &spec.features, &mut r)
        })
        .collect::<Result<_>>()?;
    let alpha = mode(&models.iter().map(NgrcModel::alpha).collect::<Vec<_>>());

    let mut cells = Vec::with_capacity(spec.gains.len());
    for (ki, &gain) in spec.gains.iter().enumerate() {
        let outcomes: Vec<Option<f64>> = models
            .par_iter()
            .enumerate()
            .map(|(t, model)| {
                let mut r = rng::child(
                    seed,
                    "control-run",
                    &[spec.sigma_d.to_bits(), spec.sigma_dw.to_bits(), ki as u64, t as u64],
                );
                let perturbed = perturb_weights(model, spec.sigma_dw, &mut r)?;
                let ctl = ControllerConfig {
                    gain,
                    target: target.clone(),
                    model: &perturbed,
                };
                let trace = run_closed_loop(&plant, &ctl, s0, spec.n_iters, &mut r)?;
                if trace.len() <= spec.window.1 {
                    return Ok(None);
                }
                window_rmse(&trace, spec.window.0, spec.window.1).map(Some)
            })
            .collect::<Result<_>>()?;
        let ok: Vec<f64> = outcomes.iter().flatten().copied().collect();
        let (mean, std) = mean_std(&ok);
        cells.push(SweepCell {
            sweep: spec.label.clone(),
            cell_param: gain,
            sigma_d: spec.sigma_d,
            sigma_dw: spec.sigma_dw,
            mean_rmse: mean,
            std_rmse: std,
            trials: spec.trials,
            escaped: outcomes.len() - ok.len(),
            alpha,
        });
    }
    Ok(SweepResult { cells })
}

/// Example traces for one task: a single model, one closed loop per gain.
#[allow(clippy::too_many_arguments)]
pub fn run_control_traces(
    task: ControlTask,
    gains: &[f64],
    sigma_d: f64,
    sigma_dw: f64,
    n_iters: usize,
    s0: Option<PlantState>,
    data: &DataGenSpec,
    alpha_grid: &[f64],
    params: &HenonParams,
    seed: u64,
) -> Result<(NgrcModel, Vec<ControlTrace>)> {
    validate_grid(alpha_grid)?;
    let model = train_controller_model(
        data,
        params,
        alpha_grid,
        &FeatureConfig::henon(),
        &mut rng::child(seed, "trace-model", &[]),
    )?;
    let plant = Henon::new(*params, NoiseSpec::new(sigma_d)?);
    let s0 = match s0 {
        Some(s) => s,
        None => task.initial_state(params)?,
    };
    let target = task.target(params)?;
    let traces = gains
        .iter()
        .enumerate()
        .map(|(ki, &gain)| {
            let mut r = rng::child(seed, "trace-run", &[ki as u64]);
            let perturbed = perturb_weights(&model, sigma_dw, &mut r)?;
            let ctl = ControllerConfig {
                gain,
                target: target.clone(),
                model: &perturbed,
            };
            let mut trace = run_closed_loop(&plant, &ctl, s0, n_iters, &mut r)?;
            trace.meta.sigma_dw = sigma_dw;
            trace.meta.seed = seed;
            Ok(trace)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((model, traces))
}
