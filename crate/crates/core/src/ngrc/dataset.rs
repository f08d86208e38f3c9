use crate::{Error, Result};

/// Aligned samples `(X_i, u_i) -> Y_{i+1}` with a train/test split.
///
/// Rows `0..split` are the training rows, `split..len` the test rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDataset {
    states: Vec<Vec<f64>>,
    perturbations: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    split: usize,
}

impl TrainingDataset {
    pub fn new(
        states: Vec<Vec<f64>>,
        perturbations: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        split: usize,
    ) -> Result<Self> {
        let n = states.len();
        if perturbations.len() != n || targets.len() != n {
            return Err(Error::Config(format!(
                "dataset sequences differ in length: {} states, {} perturbations, {} targets",
                n,
                perturbations.len(),
                targets.len()
            )));
        }
        if split > n {
            return Err(Error::Config(format!(
                "split index {split} beyond dataset length {n}"
            )));
        }
        Ok(Self {
            states,
            perturbations,
            targets,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn m_train(&self) -> usize {
        self.split
    }

    pub fn m_test(&self) -> usize {
        self.len() - self.split
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn perturbations(&self) -> &[Vec<f64>] {
        &self.perturbations
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    /// `(X, u, Y)` for the training rows.
    pub fn train(&self) -> Rows<'_> {
        self.rows(0..self.split)
    }

    /// `(X, u, Y)` for the test rows.
    pub fn test(&self) -> Rows<'_> {
        self.rows(self.split..self.len())
    }

    fn rows(&self, r: std::ops::Range<usize>) -> Rows<'_> {
        Rows {
            states: &self.states[r.clone()],
            perturbations: &self.perturbations[r.clone()],
            targets: &self.targets[r],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Rows<'a> {
    pub states: &'a [Vec<f64>],
    pub perturbations: &'a [Vec<f64>],
    pub targets: &'a [Vec<f64>],
}

impl Rows<'_> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}
