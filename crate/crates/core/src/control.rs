//! Feedback-linearizing control with a learned model.
//!
//! At iteration `i` the controller measures the tracking error
//! `e_i = x_i - x_des,i` and applies
//!
//! ```text
//! u_i = w_u⁻¹ [ x_des,i+1 - F̂(X_i) + K e_i ]
//! ```
//!
//! With a perfect model and no noise the error obeys `e_{i+1} = K e_i`, which
//! decays for |K| < 1.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ngrc::{predict_unforced, NgrcModel};
use crate::plant::DiscretePlant;
use crate::{Error, Result};

/// Desired value of the controlled output at each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetTrajectory {
    Constant(f64),
    /// `values[(i + phase) % len]`.
    Periodic { values: Vec<f64>, phase: usize },
    /// Sorted `(start_iteration, value)` breakpoints; the first must start at 0.
    Piecewise(Vec<(usize, f64)>),
}

impl TargetTrajectory {
    pub fn periodic(values: Vec<f64>, phase: usize) -> Result<Self> {
        let t = Self::Periodic { values, phase };
        t.validate()?;
        Ok(t)
    }

    pub fn piecewise(points: Vec<(usize, f64)>) -> Result<Self> {
        let t = Self::Piecewise(points);
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant(v) if !v.is_finite() => {
                Err(Error::Config("target value must be finite".into()))
            }
            Self::Periodic { values, .. } if values.is_empty() => {
                Err(Error::Config("periodic target needs at least one value".into()))
            }
            Self::Periodic { values, .. } if values.iter().any(|v| !v.is_finite()) => {
                Err(Error::Config("target values must be finite".into()))
            }
            Self::Piecewise(points) => {
                if points.first().map(|p| p.0) != Some(0) {
                    return Err(Error::Config(
                        "piecewise target must start at iteration 0".into(),
                    ));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Config(
                        "piecewise breakpoints must be strictly increasing".into(),
                    ));
                }
                if points.iter().any(|p| !p.1.is_finite()) {
                    return Err(Error::Config("target values must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Desired output at iteration `i`.
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Periodic { values, phase } => values[(i + phase) % values.len()],
            Self::Piecewise(points) => {
                let k = points.partition_point(|p| p.0 <= i);
                points[k.saturating_sub(1)].1
            }
        }
    }
}

/// Gain, target and model for one closed-loop run.
#[derive(Debug, Clone)]
pub struct ControllerConfig<'a> {
    pub gain: f64,
    pub target: TargetTrajectory,
    pub model: &'a NgrcModel,
}

impl ControllerConfig<'_> {
    /// Whether the ideal error dynamics `e_{i+1} = K e_i` contract.
    pub fn is_stable_gain(&self) -> bool {
        self.gain.abs() < 1.0
    }
}

/// One closed-loop iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlRecord {
    pub iter: usize,
    /// Observables before the step.
    pub observables: Vec<f64>,
    pub u: f64,
    pub x_des: f64,
    pub e: f64,
}

impl ControlRecord {
    /// Controlled output, the first observable.
    pub fn x(&self) -> f64 {
        self.observables[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceMeta {
    pub gain: f64,
    pub sigma_d: f64,
    pub sigma_dw: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlTrace {
    pub records: Vec<ControlRecord>,
    /// The run ended early because the plant left the bounded region.
    pub escaped: bool,
    pub meta: TraceMeta,
}

impl ControlTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.e)
    }

    /// Relative error `|e_i| / |x_des,i|` at iteration `i`.
    pub fn relative_error(&self, i: usize) -> Option<f64> {
        self.records.get(i).map(|r| r.e.abs() / r.x_des.abs())
    }

    /// Copy restricted to iterations `range`.
    pub fn window(&self, range: std::ops::Range<usize>) -> ControlTrace {
        let end = range.end.min(self.records.len());
        let start = range.start.min(end);
        ControlTrace {
            records: self.records[start..end].to_vec(),
            escaped: self.escaped,
            meta: self.meta,
        }
    }
}

/// `y - y_des`.
pub fn tracking_error(y: f64, y_des: f64) -> f64 {
    y - y_des
}

/// Scalar control law `u = (y_des_next - F̂(X) + K e) / w_u`.
pub fn control_signal(model: &NgrcModel, x: &[f64], y_des_next: f64, e: f64, gain: f64) -> Result<f64> {
    let g = model.scalar_gain().ok_or(Error::Dimension {
        what: "control dimension",
        expected: 1,
        got: model.config().d,
    })?;
    model.check_invertible()?;
    let f = predict_unforced(model, x)?[0];
    Ok((y_des_next - f + gain * e) / g)
}

/// Vector form `u = W_u⁻¹ [ y_des_next - F̂(X) + K e ]` for `d` controlled
/// outputs and a `d × d` gain matrix.
pub fn control_signal_mimo(
    model: &NgrcModel,
    x: &[f64],
    y_des_next: &[f64],
    e: &[f64],
    gain: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let d = model.config().d;
    for (what, len) in [("desired output", y_des_next.len()), ("tracking error", e.len())] {
        if len != d {
            return Err(Error::Dimension { what, expected: d, got: len });
        }
    }
    if gain.shape() != (d, d) {
        return Err(Error::Dimension {
            what: "gain matrix",
            expected: d,
            got: gain.nrows(),
        });
    }
    model.check_invertible()?;
    let f = DVector::from_vec(predict_unforced(model, x)?);
    let rhs = DVector::from_column_slice(y_des_next) - f + gain * DVector::from_column_slice(e);
    let u = model
        .w_u()
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::NonInvertibleEffectiveness(0.0))?;
    Ok(u.iter().copied().collect())
}

/// Run the controller against `plant` from `s0` for `n_iters` iterations.
///
/// Iteration `i` records the state before the step, the applied control and
/// the error against `x_des,i`. If the plant escapes the run stops and the
/// trace is marked as escaped.
pub fn run_closed_loop<P: DiscretePlant, R: Rng + ?Sized>(
    plant: &P,
    controller: &ControllerConfig<'_>,
    s0: P::State,
    n_iters: usize,
    rng: &mut R,
) -> Result<ControlTrace> {
    if n_iters == 0 {
        return Err(Error::Config("n_iters must be at least 1".into()));
    }
    controller.target.validate()?;
    controller.model.check_invertible()?;
    let mut records = Vec::with_capacity(n_iters);
    let mut state = s0;
    let mut escaped = plant.has_escaped(&state);
    for i in 0..n_iters {
        if escaped {
            break;
        }
        let obs = plant.observe(&state);
        let x_des = controller.target.at(i);
        let e = tracking_error(plant.output(&state), x_des);
        let u = control_signal(controller.model, &obs, controller.target.at(i + 1), e, controller.gain)?;
        records.push(ControlRecord {
            iter: i,
            observables: obs,
            u,
            x_des,
            e,
        });
        state = match plant.step(&state, u, rng) {
            Ok(s) => s,
            Err(Error::Escaped { .. }) => {
                escaped = true;
                continue;
            }
            Err(err) => return Err(err),
        };
        escaped = plant.has_escaped(&state);
    }
    Ok(ControlTrace {
        records,
        escaped,
        meta: TraceMeta {
            gain: controller.gain,
            sigma_d: plant.noise_level(),
            ..TraceMeta::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngrc::FeatureConfig;
    use crate::plant::{fixed_points, Henon, HenonParams, NoiseSpec, PlantState};
    use crate::rng;

    fn exact() -> NgrcModel {
        NgrcModel::scalar(&[1.0, 0.0, 1.0, -1.4, 0.0, 0.0], 1.0, FeatureConfig::henon(), 0.0).unwrap()
    }

    #[test]
    fn errors() {
        assert_eq!(tracking_error(1.5, 1.5), 0.0);
        assert!((tracking_error(0.63135, -1.13135) - 1.7627).abs() < 1e-12);
        assert_eq!(tracking_error(-1.0, 0.0), -1.0);
    }

    #[test]
    fn deadbeat_signal() {
        let (p1, p2) = fixed_points(&HenonParams::default()).unwrap();
        let u = control_signal(&exact(), &[p1.x, p1.y], p2.x, 0.0, 0.0).unwrap();
        assert!((u - (p2.x - p1.x)).abs() < 1e-12);
        assert!((u + 1.7627).abs() < 1e-4);
    }

    #[test]
    fn no_correction_needed() {
        let m = exact();
        let x = [0.4, -0.1];
        let f = predict_unforced(&m, &x).unwrap()[0];
        assert_eq!(control_signal(&m, &x, f, 0.0, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn scalar_inverse() {
        // F̂ = 0 everywhere, w_u = 2: u = (1 - 0 + 1) / 2
        let m = NgrcModel::scalar(&[0.0; 6], 2.0, FeatureConfig::henon(), 0.0).unwrap();
        assert_eq!(control_signal(&m, &[0.3, 0.3], 1.0, 2.0, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn singular_effectiveness() {
        let m = NgrcModel::scalar(&[1.0, 0.0, 1.0, -1.4, 0.0, 0.0], 1e-13, FeatureConfig::henon(), 0.0).unwrap();
        assert!(matches!(
            control_signal(&m, &[0.1, 0.1], 0.0, 0.0, 0.0),
            Err(Error::NonInvertibleEffectiveness(_))
        ));
    }

    #[test]
    fn mimo_reduces_to_scalar() {
        let m = exact();
        let x = [0.2, 0.05];
        let s = control_signal(&m, &x, -0.4, 0.3, 0.6).unwrap();
        let v = control_signal_mimo(&m, &x, &[-0.4], &[0.3], &DMatrix::from_element(1, 1, 0.6)).unwrap();
        assert!((s - v[0]).abs() < 1e-15);
    }

    #[test]
    fn targets() {
        assert_eq!(TargetTrajectory::Constant(2.0).at(17), 2.0);
        let p = TargetTrajectory::periodic(vec![1.0, 2.0, 3.0, 4.0], 1).unwrap();
        assert_eq!((0..6).map(|i| p.at(i)).collect::<Vec<_>>(), vec![2.0, 3.0, 4.0, 1.0, 2.0, 3.0]);
        let w = TargetTrajectory::piecewise(vec![(0, -1.5), (10, 1.5)]).unwrap();
        assert_eq!(w.at(0), -1.5);
        assert_eq!(w.at(9), -1.5);
        assert_eq!(w.at(10), 1.5);
        assert_eq!(w.at(1000), 1.5);
        assert!(TargetTrajectory::piecewise(vec![(1, 0.0)]).is_err());
        assert!(TargetTrajectory::piecewise(vec![(0, 0.0), (0, 1.0)]).is_err());
        assert!(TargetTrajectory::periodic(vec![], 0).is_err());
    }

    #[test]
    fn free_motion_needs_no_force() {
        let plant = Henon::default();
        let mut s = PlantState::new(0.1, 0.05);
        let s0 = s;
        let mut free = Vec::new();
        for _ in 0..40 {
            free.push(s.x);
            s = crate::plant::henon_map(s, 0.0, &plant.params, 0.0, 0.0);
        }
        free.push(s.x);
        let model = exact();
        let ctl = ControllerConfig {
            gain: 0.0,
            target: TargetTrajectory::periodic(free.clone(), 0).unwrap(),
            model: &model,
        };
        let trace = run_closed_loop(&plant, &ctl, s0, 40, &mut rng::root(1)).unwrap();
        assert_eq!(trace.len(), 40);
        assert!(trace.records.iter().all(|r| r.u.abs() < 1e-10));
    }

    #[test]
    fn escape_truncates() {
        let plant = Henon::new(HenonParams::default(), NoiseSpec::NONE);
        let model = exact();
        let ctl = ControllerConfig {
            gain: 1.5,
            target: TargetTrajectory::Constant(-1.13135),
            model: &model,
        };
        let (p1, _) = fixed_points(&plant.params).unwrap();
        let trace = run_closed_loop(&plant, &ctl, p1, 500, &mut rng::root(0)).unwrap();
        assert!(trace.escaped);
        assert!(trace.len() < 500);
        assert!(!ctl.is_stable_gain());
    }

    #[test]
    fn errors_recorded_exactly() {
        let plant = Henon::new(HenonParams::default(), NoiseSpec::new(1e-3).unwrap());
        let model = exact();
        let ctl = ControllerConfig { gain: 0.4, target: TargetTrajectory::Constant(-1.0), model: &model };
        let trace = run_closed_loop(&plant, &ctl, PlantState::new(0.0, 0.0), 30, &mut rng::root(4)).unwrap();
        for r in &trace.records {
            assert_eq!(r.e, r.x() - r.x_des);
        }
    }
}
