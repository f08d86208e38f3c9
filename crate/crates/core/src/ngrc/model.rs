use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::TrainingDataset;
use super::features::{assemble_features, check_len, state_features, FeatureConfig};
use super::ridge::{self, SolveInfo};
use crate::{Error, Result};

/// Magnitude below which the control effectiveness is treated as singular.
pub const EFFECTIVENESS_FLOOR: f64 = 1e-12;

/// Trained readout, partitioned into the control-effectiveness block `w_u`
/// (d × d) and the state readout `w_x` (d × (1 + d_lin + d_nonlin)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelFile", try_from = "ModelFile")]
pub struct NgrcModel {
    w_u: DMatrix<f64>,
    w_x: DMatrix<f64>,
    config: FeatureConfig,
    alpha: f64,
    solve: Option<SolveInfo>,
}

/// On-disk layout: `{"alpha", "w_u", "w_x", "config"}` with row-major nested
/// arrays. `w_x` columns follow `c, x, y, x², xy, y²` for the Hénon layout.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    alpha: f64,
    w_u: Vec<Vec<f64>>,
    w_x: Vec<Vec<f64>>,
    config: FeatureConfig,
}

impl From<NgrcModel> for ModelFile {
    fn from(m: NgrcModel) -> Self {
        let rows = |w: &DMatrix<f64>| {
            w.row_iter()
                .map(|r| r.iter().copied().collect())
                .collect::<Vec<Vec<f64>>>()
        };
        ModelFile {
            alpha: m.alpha,
            w_u: rows(&m.w_u),
            w_x: rows(&m.w_x),
            config: m.config,
        }
    }
}

impl TryFrom<ModelFile> for NgrcModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let to_matrix = |rows: &[Vec<f64>], cols: usize, what: &'static str| {
            for r in rows {
                check_len(what, cols, r.len())?;
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            Ok::<_, Error>(DMatrix::from_row_slice(rows.len(), cols, &flat))
        };
        f.config.validate()?;
        check_len("w_u rows", f.config.d, f.w_u.len())?;
        check_len("w_x rows", f.config.d, f.w_x.len())?;
        let w_u = to_matrix(&f.w_u, f.config.d, "w_u columns")?;
        let w_x = to_matrix(&f.w_x, f.config.d_state(), "w_x columns")?;
        NgrcModel::from_parts(w_u, w_x, f.config, f.alpha)
    }
}

impl NgrcModel {
    /// Build a model from explicit weight blocks.
    pub fn from_parts(
        w_u: DMatrix<f64>,
        w_x: DMatrix<f64>,
        config: FeatureConfig,
        alpha: f64,
    ) -> Result<Self> {
        config.validate()?;
        check_len("w_u rows", config.d, w_u.nrows())?;
        check_len("w_u columns", config.d, w_u.ncols())?;
        check_len("w_x rows", config.d, w_x.nrows())?;
        check_len("w_x columns", config.d_state(), w_x.ncols())?;
        Ok(Self {
            w_u,
            w_x,
            config,
            alpha,
            solve: None,
        })
    }

    /// Scalar-control model from a state readout row and a gain.
    pub fn scalar(w_x: &[f64], w_u: f64, config: FeatureConfig, alpha: f64) -> Result<Self> {
        check_len("control dimension", 1, config.d)?;
        Self::from_parts(
            DMatrix::from_element(1, 1, w_u),
            DMatrix::from_row_slice(1, w_x.len(), w_x),
            config,
            alpha,
        )
    }

    pub fn w_u(&self) -> &DMatrix<f64> {
        &self.w_u
    }

    pub fn w_x(&self) -> &DMatrix<f64> {
        &self.w_x
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Diagnostics of the ridge solve, for trained models.
    pub fn solve_info(&self) -> Option<SolveInfo> {
        self.solve
    }

    /// Row `r` of the full readout `[w_u | w_x]`.
    pub fn weight_row(&self, r: usize) -> Vec<f64> {
        self.w_u
            .row(r)
            .iter()
            .chain(self.w_x.row(r).iter())
            .copied()
            .collect()
    }

    /// `[w_u | w_x]` as a d × d_tot matrix.
    pub fn readout(&self) -> DMatrix<f64> {
        let d = self.config.d;
        let mut w = DMatrix::zeros(d, self.config.d_tot());
        w.view_mut((0, 0), (d, d)).copy_from(&self.w_u);
        w.view_mut((0, d), (d, self.config.d_state())).copy_from(&self.w_x);
        w
    }

    /// Scalar control effectiveness; `None` unless `d = 1`.
    pub fn scalar_gain(&self) -> Option<f64> {
        (self.config.d == 1).then(|| self.w_u[(0, 0)])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Fails when `w_u` cannot be inverted.
    pub fn check_invertible(&self) -> Result<()> {
        if self.config.d == 1 {
            let g = self.w_u[(0, 0)];
            if !(g.abs() >= EFFECTIVENESS_FLOOR) {
                return Err(Error::NonInvertibleEffectiveness(g.abs()));
            }
            return Ok(());
        }
        let smin = self
            .w_u
            .singular_values()
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(*v));
        if !(smin >= EFFECTIVENESS_FLOOR) {
            return Err(Error::NonInvertibleEffectiveness(smin));
        }
        Ok(())
    }
}

/// Train the readout on the training rows of `data`.
pub fn train_ridge(data: &TrainingDataset, alpha: f64, config: &FeatureConfig) -> Result<NgrcModel> {
    config.validate()?;
    let rows = data.train();
    if rows.is_empty() {
        return Err(Error::Training("M_train must be at least 1".into()));
    }
    let m = rows.len();
    let mut design = DMatrix::zeros(m, config.d_tot());
    let mut targets = DMatrix::zeros(m, config.d);
    for i in 0..m {
        let f = assemble_features(&rows.perturbations[i], &rows.states[i], config)?;
        design.row_mut(i).copy_from_slice(f.as_slice());
        check_len("target", config.d, rows.targets[i].len())?;
        targets.row_mut(i).copy_from_slice(&rows.targets[i]);
    }
    let sol = ridge::solve(&design, &targets, alpha)?;
    let d = config.d;
    let w_u = sol.weights.columns(0, d).into_owned();
    let w_x = sol.weights.columns(d, config.d_state()).into_owned();
    let mut model = NgrcModel::from_parts(w_u, w_x, *config, alpha)?;
    model.solve = Some(sol.info);
    model.check_invertible()?;
    Ok(model)
}

/// Learned unforced map `F̂(X) = w_x · (c ⊕ lin ⊕ nonlin)`.
pub fn predict_unforced(model: &NgrcModel, x: &[f64]) -> Result<Vec<f64>> {
    let o = DVector::from_vec(state_features(x, &model.config)?);
    Ok((&model.w_x * o).iter().copied().collect())
}

/// `F̂(X) + w_u · u`.
pub fn predict(model: &NgrcModel, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    check_len("control vector", model.config.d, u.len())?;
    let mut y = predict_unforced(model, x)?;
    let wu = &model.w_u * DVector::from_column_slice(u);
    for (yi, di) in y.iter_mut().zip(wu.iter()) {
        *yi += di;
    }
    Ok(y)
}

/// Copy of `model` with every weight of `[w_u | w_x]` shifted by an
/// independent `N(0, sigma_dw²)` draw, row by row, `w_u` entries first.
pub fn perturb_weights<R: Rng + ?Sized>(
    model: &NgrcModel,
    sigma_dw: f64,
    rng: &mut R,
) -> Result<NgrcModel> {
    if !(sigma_dw >= 0.0) || !sigma_dw.is_finite() {
        return Err(Error::Config(format!(
            "weight perturbation must be finite and non-negative, got {sigma_dw}"
        )));
    }
    let mut out = model.clone();
    for r in 0..model.config.d {
        for c in 0..out.w_u.ncols() {
            let z: f64 = StandardNormal.sample(rng);
            out.w_u[(r, c)] += sigma_dw * z;
        }
        for c in 0..out.w_x.ncols() {
            let z: f64 = StandardNormal.sample(rng);
            out.w_x[(r, c)] += sigma_dw * z;
        }
    }
    Ok(out)
}

impl NgrcModel {
    pub fn predict_unforced(&self, x: &[f64]) -> Result<Vec<f64>> {
        predict_unforced(self, x)
    }

    pub fn predict(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        predict(self, x, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    const HENON_WX: [f64; 6] = [1.0, 0.0, 1.0, -1.4, 0.0, 0.0];

    fn exact() -> NgrcModel {
        NgrcModel::scalar(&HENON_WX, 1.0, FeatureConfig::henon(), 0.0).unwrap()
    }

    #[test]
    fn unforced_prediction() {
        let m = exact();
        let y = predict_unforced(&m, &[0.63135, 0.18941]).unwrap()[0];
        assert!((y - 0.63137).abs() < 1e-4);
        let y = predict_unforced(&m, &[1.0, 0.3]).unwrap()[0];
        assert!((y - (-0.1)).abs() < 1e-12);
        let zero = NgrcModel::scalar(&[0.0; 6], 0.0, FeatureConfig::henon(), 0.0).unwrap();
        assert_eq!(predict_unforced(&zero, &[0.4, -0.2]).unwrap(), vec![0.0]);
        assert!(predict_unforced(&m, &[1.0]).is_err());
    }

    #[test]
    fn forced_prediction() {
        let m = exact();
        assert_eq!(
            predict(&m, &[1.0, 0.3], &[0.0]).unwrap(),
            predict_unforced(&m, &[1.0, 0.3]).unwrap()
        );
        let y = predict(&m, &[1.0, 0.3], &[0.5]).unwrap()[0];
        assert!((y - 0.4).abs() < 1e-12);
        let pure = NgrcModel::scalar(&[0.0; 6], 2.0, FeatureConfig::henon(), 0.0).unwrap();
        assert_eq!(predict(&pure, &[0.7, 0.1], &[0.25]).unwrap(), vec![0.5]);
    }

    #[test]
    fn perturbation_zero_sigma_is_identity() {
        let m = exact();
        let mut r = rng::root(3);
        assert_eq!(perturb_weights(&m, 0.0, &mut r).unwrap(), m);
    }

    #[test]
    fn perturbation_is_reproducible() {
        let m = exact();
        let a = perturb_weights(&m, 1e-3, &mut rng::root(11)).unwrap();
        let b = perturb_weights(&m, 1e-3, &mut rng::root(11)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, m);
    }

    #[test]
    fn perturbation_statistics() {
        let m = exact();
        let base = m.weight_row(0);
        let mut r = rng::root(2024);
        let trials = 10_000;
        let mut sums = vec![0.0; base.len()];
        let mut sq = vec![0.0; base.len()];
        for _ in 0..trials {
            let p = perturb_weights(&m, 0.1, &mut r).unwrap().weight_row(0);
            for k in 0..base.len() {
                let d = p[k] - base[k];
                sums[k] += d;
                sq[k] += d * d;
            }
        }
        for k in 0..base.len() {
            let mean = sums[k] / trials as f64;
            let var = (sq[k] - trials as f64 * mean * mean) / (trials as f64 - 1.0);
            assert!((var.sqrt() - 0.1).abs() < 0.005, "component {k}: std {}", var.sqrt());
        }
    }

    #[test]
    fn json_schema() {
        let m = exact();
        let s = m.to_json().unwrap();
        assert_eq!(
            s,
            r#"{"alpha":0.0,"w_u":[[1.0]],"w_x":[[1.0,0.0,1.0,-1.4,0.0,0.0]],"config":{"d_lin":2,"d":1,"c":1.0,"p":2}}"#
        );
        assert_eq!(NgrcModel::from_json(&s).unwrap(), m);
        let bad = r#"{"alpha":0.0,"w_u":[[1.0]],"w_x":[[1.0,0.0]],"config":{"d_lin":2,"d":1,"c":1.0,"p":2}}"#;
        assert!(NgrcModel::from_json(bad).is_err());
    }

    #[test]
    fn zero_effectiveness_rejected_by_training() {
        let states = vec![vec![0.1, 0.2], vec![0.3, -0.1], vec![-0.5, 0.05]];
        let us = vec![vec![0.01], vec![-0.02], vec![0.03]];
        let ys = vec![vec![0.0]; 3];
        let data = TrainingDataset::new(states, us, ys, 3).unwrap();
        assert!(matches!(
            train_ridge(&data, 1e-6, &FeatureConfig::henon()),
            Err(Error::NonInvertibleEffectiveness(_))
        ));
    }

    proptest! {
        #[test]
        fn linear_in_control(x in -1.5f64..1.5, y in -0.5f64..0.5, u1 in -2.0f64..2.0, u2 in -2.0f64..2.0, g in 0.1f64..3.0) {
            let m = NgrcModel::scalar(&HENON_WX, g, FeatureConfig::henon(), 0.0).unwrap();
            let a = predict(&m, &[x, y], &[u1]).unwrap()[0];
            let b = predict(&m, &[x, y], &[u2]).unwrap()[0];
            prop_assert!(((a - b) - g * (u1 - u2)).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()));
        }
    }
}
