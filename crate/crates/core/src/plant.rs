//! The controlled Hénon map
//!
//! ```text
//! x' = 1 - a x² + y + g u + d_x
//! y' = b x + d_y
//! ```
//!
//! with `d_x, d_y ~ N(0, σ_d²)` drawn fresh each step (`d_x` first).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// States with |x| or |y| beyond this bound count as escaped.
pub const ESCAPE_BOUND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenonParams {
    pub a: f64,
    pub b: f64,
    /// Gain on the control input.
    pub g: f64,
}

impl Default for HenonParams {
    fn default() -> Self {
        Self {
            a: 1.4,
            b: 0.3,
            g: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub x: f64,
    pub y: f64,
}

impl PlantState {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.y]
    }
}

/// Additive process noise on both coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma_d: f64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec { sigma_d: 0.0 };

    pub fn new(sigma_d: f64) -> Result<Self> {
        if !(sigma_d >= 0.0) || !sigma_d.is_finite() {
            return Err(Error::Config(format!(
                "noise level must be finite and non-negative, got {sigma_d}"
            )));
        }
        Ok(Self { sigma_d })
    }
}

/// A discrete-time plant with additive scalar control.
///
/// `observe` gives the inputs of the learned model, `output` the controlled
/// variable. `step` must be deterministic given the state, the control and
/// the draws taken from `rng`.
pub trait DiscretePlant {
    type State: Clone;

    fn step<R: Rng + ?Sized>(&self, s: &Self::State, u: f64, rng: &mut R) -> Result<Self::State>;

    fn observe(&self, s: &Self::State) -> Vec<f64>;

    fn output(&self, s: &Self::State) -> f64;

    fn has_escaped(&self, s: &Self::State) -> bool;

    fn noise_level(&self) -> f64 {
        0.0
    }
}

/// Hénon map with its noise model, as a [`DiscretePlant`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Henon {
    pub params: HenonParams,
    pub noise: NoiseSpec,
}

impl Henon {
    pub fn new(params: HenonParams, noise: NoiseSpec) -> Self {
        Self { params, noise }
    }
}

impl DiscretePlant for Henon {
    type State = PlantState;

    fn step<R: Rng + ?Sized>(&self, s: &PlantState, u: f64, rng: &mut R) -> Result<PlantState> {
        henon_step(*s, u, &self.params, &self.noise, rng)
    }

    fn observe(&self, s: &PlantState) -> Vec<f64> {
        s.to_vec()
    }

    fn output(&self, s: &PlantState) -> f64 {
        s.x
    }

    fn has_escaped(&self, s: &PlantState) -> bool {
        has_escaped(s)
    }

    fn noise_level(&self) -> f64 {
        self.noise.sigma_d
    }
}

/// One step of the controlled, noisy map. Two standard-normal draws are
/// consumed per call regardless of `σ_d`, so the stream position does not
/// depend on the noise level.
pub fn henon_step<R: Rng + ?Sized>(
    s: PlantState,
    u: f64,
    params: &HenonParams,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<PlantState> {
    if !s.is_finite() {
        return Err(Error::Escaped { x: s.x, y: s.y });
    }
    let zx: f64 = StandardNormal.sample(rng);
    let zy: f64 = StandardNormal.sample(rng);
    Ok(henon_map(s, u, params, noise.sigma_d * zx, noise.sigma_d * zy))
}

/// Noise-free evaluation with explicit disturbance terms.
pub fn henon_map(s: PlantState, u: f64, p: &HenonParams, dx: f64, dy: f64) -> PlantState {
    PlantState {
        x: 1.0 - p.a * s.x * s.x + s.y + p.g * u + dx,
        y: p.b * s.x + dy,
    }
}

/// The two fixed points of the uncontrolled map, roots of
/// `a x² + (1 - b) x - 1 = 0` with `y = b x`. The first has the larger `x`
/// (the one inside the attractor for the classic parameters).
pub fn fixed_points(params: &HenonParams) -> Result<(PlantState, PlantState)> {
    let HenonParams { a, b, .. } = *params;
    if a == 0.0 {
        return Err(Error::Domain("a = 0 leaves a single fixed point".into()));
    }
    let disc = (1.0 - b).powi(2) + 4.0 * a;
    if !(disc > 0.0) {
        return Err(Error::Domain(format!(
            "no real fixed points: (1-b)² + 4a = {disc}"
        )));
    }
    let sq = disc.sqrt();
    // Pair the roots so neither is formed by cancellation.
    let q = -0.5 * ((1.0 - b) + (1.0 - b).signum() * sq);
    let (r1, r2) = if q == 0.0 {
        (sq / (2.0 * a), -sq / (2.0 * a))
    } else {
        (q / a, -1.0 / q)
    };
    let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
    Ok((PlantState::new(hi, b * hi), PlantState::new(lo, b * lo)))
}

/// The period-4 orbit of the classic map, `P1 -> P2 -> P3 -> P4 -> P1`,
/// to six significant digits.
pub const fn period4_orbit() -> [PlantState; 4] {
    [
        PlantState::new(0.638194, -0.21203),
        PlantState::new(0.217762, 0.191458),
        PlantState::new(1.12507, 0.0653285),
        PlantState::new(-0.706767, 0.337521),
    ]
}

/// True when a coordinate exceeds [`ESCAPE_BOUND`] or is not finite.
pub fn has_escaped(s: &PlantState) -> bool {
    !(s.x.abs() <= ESCAPE_BOUND && s.y.abs() <= ESCAPE_BOUND)
}
