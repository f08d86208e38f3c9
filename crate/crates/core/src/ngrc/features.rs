use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shape of the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Number of observed variables.
    pub d_lin: usize,
    /// Number of control inputs (and of predicted outputs).
    pub d: usize,
    /// Constant feature.
    pub c: f64,
    /// Highest monomial order.
    pub p: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self::henon()
    }
}

impl FeatureConfig {
    /// Two observables, one control input, `c = 1`, quadratic monomials.
    pub const fn henon() -> Self {
        Self {
            d_lin: 2,
            d: 1,
            c: 1.0,
            p: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_lin == 0 {
            return Err(Error::Config("d_lin must be positive".into()));
        }
        if self.d == 0 {
            return Err(Error::Config("control dimension d must be positive".into()));
        }
        if self.p == 0 {
            return Err(Error::Config("monomial order p must be at least 1".into()));
        }
        if !self.c.is_finite() {
            return Err(Error::Config("constant c must be finite".into()));
        }
        Ok(())
    }

    /// Number of unique monomials of degree 2..=p.
    pub fn d_nonlin(&self) -> usize {
        (2..=self.p).map(|k| monomial_count(self.d_lin, k)).sum()
    }

    /// Length of `c ⊕ lin ⊕ nonlin`.
    pub fn d_state(&self) -> usize {
        1 + self.d_lin + self.d_nonlin()
    }

    /// Length of the full feature vector.
    pub fn d_tot(&self) -> usize {
        self.d + self.d_state()
    }
}

/// Number of monomials of exact degree `degree` in `n` variables,
/// i.e. combinations with repetition `C(n + degree - 1, degree)`.
pub fn monomial_count(n: usize, degree: usize) -> usize {
    if n == 0 {
        return usize::from(degree == 0);
    }
    // C(n + k - 1, k) computed incrementally; each partial product is an
    // exact binomial coefficient so the division never truncates.
    let mut acc = 1usize;
    for i in 1..=degree {
        acc = acc * (n + i - 1) / i;
    }
    acc
}

/// Full feature vector `[u | c | lin | nonlin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    entries: Vec<f64>,
    d: usize,
}

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Control block.
    pub fn control(&self) -> &[f64] {
        &self.entries[..self.d]
    }

    /// Everything after the control block, `c ⊕ lin ⊕ nonlin`.
    pub fn state(&self) -> &[f64] {
        &self.entries[self.d..]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }
}

/// Linear block: the observables unchanged.
pub fn build_linear_features(x: &[f64], config: &FeatureConfig) -> Result<Vec<f64>> {
    check_len("observable vector", config.d_lin, x.len())?;
    Ok(x.to_vec())
}

/// All unique monomials of `x` of total degree 2..=p, in graded
/// lexicographic order (degree ascending, then index tuples `i <= j <= ...`
/// in lexicographic order). For two variables and `p = 2` this is
/// `[x0², x0·x1, x1²]`.
pub fn build_nonlinear_features(x: &[f64], p: usize) -> Result<Vec<f64>> {
    if p < 2 {
        return Err(Error::Config(format!(
            "nonlinear features need order p >= 2, got {p}"
        )));
    }
    let mut out = Vec::with_capacity((2..=p).map(|k| monomial_count(x.len(), k)).sum());
    for degree in 2..=p {
        push_monomials(x, degree, &mut out);
    }
    Ok(out)
}

fn push_monomials(x: &[f64], degree: usize, out: &mut Vec<f64>) {
    let n = x.len();
    if n == 0 {
        return;
    }
    let mut idx = vec![0usize; degree];
    loop {
        out.push(idx.iter().map(|&i| x[i]).product());
        // advance to the next non-decreasing index tuple
        let mut pos = degree;
        while pos > 0 && idx[pos - 1] == n - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return;
        }
        let next = idx[pos - 1] + 1;
        for slot in &mut idx[pos - 1..] {
            *slot = next;
        }
    }
}

/// `c ⊕ lin ⊕ nonlin` for one observation.
pub fn state_features(x: &[f64], config: &FeatureConfig) -> Result<Vec<f64>> {
    let lin = build_linear_features(x, config)?;
    let mut out = Vec::with_capacity(config.d_state());
    out.push(config.c);
    out.extend_from_slice(&lin);
    if config.p >= 2 {
        out.extend(build_nonlinear_features(x, config.p)?);
    }
    Ok(out)
}

/// Full feature vector `u ⊕ c ⊕ lin ⊕ nonlin`.
pub fn assemble_features(u: &[f64], x: &[f64], config: &FeatureConfig) -> Result<FeatureVector> {
    check_len("control vector", config.d, u.len())?;
    let mut entries = Vec::with_capacity(config.d_tot());
    entries.extend_from_slice(u);
    entries.extend(state_features(x, config)?);
    Ok(FeatureVector {
        entries,
        d: config.d,
    })
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_block_is_identity() {
        let cfg = FeatureConfig::henon();
        assert_eq!(build_linear_features(&[0.0, 0.0], &cfg).unwrap(), vec![0.0, 0.0]);
        assert_eq!(build_linear_features(&[2.0, 3.0], &cfg).unwrap(), vec![2.0, 3.0]);
        assert_eq!(
            build_linear_features(&[0.63135, 0.18941], &cfg).unwrap(),
            vec![0.63135, 0.18941]
        );
        assert!(matches!(
            build_linear_features(&[1.0], &cfg),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn quadratic_monomials() {
        assert_eq!(build_nonlinear_features(&[2.0, 3.0], 2).unwrap(), vec![4.0, 6.0, 9.0]);
        assert_eq!(build_nonlinear_features(&[0.0, 5.0], 2).unwrap(), vec![0.0, 0.0, 25.0]);
        assert!(matches!(build_nonlinear_features(&[1.0, 2.0], 1), Err(Error::Config(_))));
    }

    /// Brute-force enumeration of combinations with repetition.
    fn oracle_monomials(x: &[f64], degree: usize) -> Vec<f64> {
        fn rec(x: &[f64], start: usize, left: usize, acc: f64, out: &mut Vec<f64>) {
            if left == 0 {
                out.push(acc);
                return;
            }
            for i in start..x.len() {
                rec(x, i, left - 1, acc * x[i], out);
            }
        }
        let mut out = Vec::new();
        rec(x, 0, degree, 1.0, &mut out);
        out
    }

    #[test]
    fn three_variable_quadratic() {
        let got = build_nonlinear_features(&[2.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(got, oracle_monomials(&[2.0, 1.0, 1.0], 2));
        assert_eq!(got, vec![4.0, 2.0, 2.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn cubic_order_matches_enumeration() {
        let x = [1.5, -2.0, 0.5];
        let got = build_nonlinear_features(&x, 3).unwrap();
        let mut want = oracle_monomials(&x, 2);
        want.extend(oracle_monomials(&x, 3));
        assert_eq!(got, want);
        let cfg = FeatureConfig { d_lin: 3, d: 1, c: 1.0, p: 3 };
        assert_eq!(got.len(), cfg.d_nonlin());
        assert_eq!(cfg.d_nonlin(), 6 + 10);
    }

    #[test]
    fn assembled_layout() {
        let cfg = FeatureConfig::henon();
        let f = assemble_features(&[0.5], &[2.0, 3.0], &cfg).unwrap();
        assert_eq!(f.as_slice(), &[0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
        let f = assemble_features(&[0.0], &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(f.as_slice(), &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(cfg.d_tot(), 7);
        assert!(assemble_features(&[0.0, 1.0], &[0.0, 0.0], &cfg).is_err());
    }

    #[test]
    fn linear_only_config() {
        let cfg = FeatureConfig { d_lin: 2, d: 1, c: 1.0, p: 1 };
        assert_eq!(cfg.d_tot(), 4);
        let f = assemble_features(&[0.1], &[2.0, 3.0], &cfg).unwrap();
        assert_eq!(f.as_slice(), &[0.1, 1.0, 2.0, 3.0]);
    }

    proptest! {
        #[test]
        fn quadratic_count(n in 1usize..=6, seed in prop::collection::vec(-3.0f64..3.0, 6)) {
            let x = &seed[..n];
            prop_assert_eq!(build_nonlinear_features(x, 2).unwrap().len(), n * (n + 1) / 2);
        }

        #[test]
        fn layout_round_trip(u in -2.0f64..2.0, x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let cfg = FeatureConfig::henon();
            let f = assemble_features(&[u], &[x, y], &cfg).unwrap();
            prop_assert_eq!(f.control(), &[u][..]);
            prop_assert_eq!(f.state().to_vec(), state_features(&[x, y], &cfg).unwrap());
        }
    }
}
