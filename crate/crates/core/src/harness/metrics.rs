use crate::control::ControlTrace;
use crate::{Error, Result};

/// Root-mean-square difference of two equal-length sequences.
pub fn rmse(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Domain("rmse of an empty sequence".into()));
    }
    if truth.len() != estimate.len() {
        return Err(Error::Dimension {
            what: "rmse estimate",
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    let ss: f64 = truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| (t - e) * (t - e))
        .sum();
    Ok((ss / truth.len() as f64).sqrt())
}

/// RMSE between `x` and `x_des` over iterations `first..=last` of a trace.
/// Fails when the trace does not reach `last`.
pub fn window_rmse(trace: &ControlTrace, first: usize, last: usize) -> Result<f64> {
    if last < first || last >= trace.len() {
        return Err(Error::Domain(format!(
            "trace of length {} does not cover iterations {first}..={last}",
            trace.len()
        )));
    }
    let rows = &trace.records[first..=last];
    let x: Vec<f64> = rows.iter().map(|r| r.x()).collect();
    let des: Vec<f64> = rows.iter().map(|r| r.x_des).collect();
    rmse(&x, &des)
}

/// Smallest `i` such that `|x_j - x_des,j| / |x_des,j| < rel_tol` for every
/// `j >= i` in the trace; `None` if the last row misses the tolerance.
pub fn iterations_to_tolerance(trace: &ControlTrace, rel_tol: f64) -> Option<usize> {
    let mut first = None;
    for r in trace.records.iter().rev() {
        if r.e.abs() / r.x_des.abs() < rel_tol {
            first = Some(r.iter);
        } else {
            break;
        }
    }
    first
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControlRecord, TraceMeta};

    #[test]
    fn rmse_values() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!((rmse(&[0.0, 2.0], &[0.0, 0.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn trace(errors: &[f64], des: f64) -> ControlTrace {
        ControlTrace {
            records: errors
                .iter()
                .enumerate()
                .map(|(i, &e)| ControlRecord {
                    iter: i,
                    observables: vec![des + e, 0.0],
                    u: 0.0,
                    x_des: des,
                    e,
                })
                .collect(),
            escaped: false,
            meta: TraceMeta::default(),
        }
    }

    #[test]
    fn tolerance_requires_staying_inside() {
        let t = trace(&[1.0, 0.001, 0.5, 0.001, 0.001], 1.0);
        assert_eq!(iterations_to_tolerance(&t, 0.01), Some(3));
        let t = trace(&[1.0, 0.001, 0.5], 1.0);
        assert_eq!(iterations_to_tolerance(&t, 0.01), None);
        let t = trace(&[0.0, 0.0], 2.0);
        assert_eq!(iterations_to_tolerance(&t, 0.01), Some(0));
    }

    #[test]
    fn window_bounds() {
        let t = trace(&[0.0, 1.0, 1.0, 0.0], 1.0);
        assert_eq!(window_rmse(&t, 1, 2).unwrap(), 1.0);
        assert!(window_rmse(&t, 1, 4).is_err());
    }
}
