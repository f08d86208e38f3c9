use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ngrc::TrainingDataset;
use crate::plant::{has_escaped, henon_step, HenonParams, NoiseSpec, PlantState};
use crate::{Error, Result};

/// Rectangle for uniform initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Default for IcBox {
    fn default() -> Self {
        Self {
            x: (-1.2, 1.2),
            y: (-0.36, 0.36),
        }
    }
}

impl IcBox {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PlantState {
        let ux: f64 = rng.random();
        let uy: f64 = rng.random();
        PlantState::new(
            self.x.0 + (self.x.1 - self.x.0) * ux,
            self.y.0 + (self.y.1 - self.y.0) * uy,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataGenSpec {
    pub m_train: usize,
    pub m_test: usize,
    /// Standard deviation of the random training perturbations.
    pub sigma_u: f64,
    /// Process noise during generation.
    pub sigma_d: f64,
    pub burn_in: usize,
    pub ic_box: IcBox,
    pub max_retries: usize,
}

impl Default for DataGenSpec {
    fn default() -> Self {
        Self {
            m_train: 10,
            m_test: 50,
            sigma_u: 0.1,
            sigma_d: 0.0,
            burn_in: 100,
            ic_box: IcBox::default(),
            max_retries: 1000,
        }
    }
}

impl DataGenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m_train + self.m_test == 0 {
            return Err(Error::Config("dataset must contain at least one row".into()));
        }
        for (name, v) in [("sigma_u", self.sigma_u), ("sigma_d", self.sigma_d)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !(self.ic_box.x.0 <= self.ic_box.x.1 && self.ic_box.y.0 <= self.ic_box.y.1) {
            return Err(Error::Config("initial-condition box is empty".into()));
        }
        if self.max_retries == 0 {
            return Err(Error::Config("max_retries must be at least 1".into()));
        }
        Ok(())
    }
}

/// Perturbed trajectory with a train/test split.
///
/// Each attempt samples an initial condition in the box, runs `burn_in`
/// unforced noise-free steps, then records `M_train + M_test` perturbed steps. Any
/// escape discards the attempt and starts over from a fresh initial
/// condition.
pub fn generate_dataset<R: Rng + ?Sized>(
    spec: &DataGenSpec,
    params: &HenonParams,
    rng: &mut R,
) -> Result<TrainingDataset> {
    spec.validate()?;
    'attempt: for _ in 0..spec.max_retries {
        let mut s = spec.ic_box.sample(rng);
        for _ in 0..spec.burn_in {
            s = henon_step(s, 0.0, params, &NoiseSpec::NONE, rng)?;
            if has_escaped(&s) {
                continue 'attempt;
            }
        }
        if let Some(data) = record_trajectory(s, spec, params, rng)? {
            return Ok(data);
        }
    }
    Err(Error::Generation {
        retries: spec.max_retries,
    })
}

/// Record `M_train + M_test` perturbed steps from `s0`, or `None` if the
/// trajectory escapes. Per step the control draw precedes the plant noise.
pub fn record_trajectory<R: Rng + ?Sized>(
    s0: PlantState,
    spec: &DataGenSpec,
    params: &HenonParams,
    rng: &mut R,
) -> Result<Option<TrainingDataset>> {
    let noise = NoiseSpec::new(spec.sigma_d)?;
    let n = spec.m_train + spec.m_test;
    let mut states = Vec::with_capacity(n);
    let mut us = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut s = s0;
    if has_escaped(&s) {
        return Ok(None);
    }
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(rng);
        let u = spec.sigma_u * z;
        let next = henon_step(s, u, params, &noise, rng)?;
        if has_escaped(&next) {
            return Ok(None);
        }
        states.push(s.to_vec());
        us.push(vec![u]);
        targets.push(vec![next.x]);
        s = next;
    }
    TrainingDataset::new(states, us, targets, spec.m_train).map(Some)
}
