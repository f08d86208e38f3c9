//! Tikhonov-regularized least squares.
//!
//! Minimizes `||A Wᵀ - Y||² + α ||W||²` by solving the regularized normal
//! equations `(AᵀA + αI) Wᵀ = AᵀY` with a Cholesky factorization. When
//! `α = 0`, or the normal matrix has condition number above
//! [`CONDITION_LIMIT`], the solve switches to an SVD pseudo-inverse.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    Cholesky,
    PseudoInverse,
}

/// How a ridge system was solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    pub method: SolveMethod,
    /// Condition number of `AᵀA + αI` (infinite when singular).
    pub condition_number: f64,
}

impl SolveInfo {
    pub fn ill_conditioned(&self) -> bool {
        !(self.condition_number <= CONDITION_LIMIT)
    }
}

#[derive(Debug, Clone)]
pub struct RidgeSolution {
    /// One row per output, one column per feature.
    pub weights: DMatrix<f64>,
    pub info: SolveInfo,
}

/// Solve the ridge problem for `design` (rows × features) and `targets`
/// (rows × outputs).
pub fn solve(design: &DMatrix<f64>, targets: &DMatrix<f64>, alpha: f64) -> Result<RidgeSolution> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!(
            "ridge parameter must be finite and non-negative, got {alpha}"
        )));
    }
    if design.nrows() == 0 {
        return Err(Error::Training("no training rows".into()));
    }
    if design.nrows() != targets.nrows() {
        return Err(Error::Dimension {
            what: "ridge targets",
            expected: design.nrows(),
            got: targets.nrows(),
        });
    }
    if design.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Training("non-finite value in training data".into()));
    }

    let n = design.ncols();
    let at = design.transpose();
    let mut normal = &at * design;
    for i in 0..n {
        normal[(i, i)] += alpha;
    }
    let rhs = &at * targets;
    let condition_number = condition(&normal);

    let (solution, method) = if alpha == 0.0 || !(condition_number <= CONDITION_LIMIT) {
        (pseudo_inverse_solve(design, targets, alpha, &normal, &rhs)?, SolveMethod::PseudoInverse)
    } else {
        match Cholesky::new(normal.clone()) {
            Some(chol) => (chol.solve(&rhs), SolveMethod::Cholesky),
            None => (
                pseudo_inverse_solve(design, targets, alpha, &normal, &rhs)?,
                SolveMethod::PseudoInverse,
            ),
        }
    };

    Ok(RidgeSolution {
        weights: solution.transpose(),
        info: SolveInfo {
            method,
            condition_number,
        },
    })
}

fn condition(normal: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(normal.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn pseudo_inverse_solve(
    design: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    alpha: f64,
    normal: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    // At α = 0 the SVD of the design itself avoids squaring its condition number.
    let (matrix, b) = if alpha == 0.0 {
        (design.clone(), targets.clone())
    } else {
        (normal.clone(), rhs.clone())
    };
    let dim = matrix.nrows().max(matrix.ncols()) as f64;
    let svd = matrix.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = dim * f64::EPSILON * smax;
    svd.solve(&b, eps)
        .map_err(|e| Error::Training(format!("pseudo-inverse solve failed: {e}")))
}
