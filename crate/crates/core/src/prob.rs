use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ p_k = 1` accepted by [`ProbVector::new`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Nonnegative vector over K ordered bins that sums to one.
///
/// Used both for encoded targets and for model predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates and wraps `probs`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDimension("empty probability vector".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "probability entry {bad} is negative or non-finite"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self(probs))
    }

    /// Wraps values the caller has already normalized.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!(!probs.is_empty());
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
        Self(probs)
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    /// Point mass on bin `index` (0-based).
    pub fn one_hot(k: usize, index: usize) -> Result<Self> {
        if index >= k {
            return Err(Error::InvalidParameter(format!(
                "class {index} out of range for K={k}"
            )));
        }
        let mut v = vec![0.0; k];
        v[index] = 1.0;
        Ok(Self(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest entry (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Entries in reverse bin order.
    pub fn reversed(&self) -> Self {
        let mut v = self.0.clone();
        v.reverse();
        Self(v)
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Row-major grid of probability vectors indexed by (horizon step, channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbGrid {
    steps: usize,
    channels: usize,
    cells: Vec<ProbVector>,
}

impl ProbGrid {
    pub fn new(steps: usize, channels: usize, cells: Vec<ProbVector>) -> Result<Self> {
        if cells.len() != steps * channels {
            return Err(Error::InvalidDimension(format!(
                "{} cells for a {steps}x{channels} grid",
                cells.len()
            )));
        }
        if let Some(k) = cells.first().map(ProbVector::len) {
            if cells.iter().any(|c| c.len() != k) {
                return Err(Error::InvalidDimension("cells with differing K".into()));
            }
        }
        Ok(Self {
            steps,
            channels,
            cells,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.steps, self.channels)
    }

    pub fn get(&self, step: usize, channel: usize) -> &ProbVector {
        &self.cells[step * self.channels + channel]
    }

    pub fn cells(&self) -> &[ProbVector] {
        &self.cells
    }
}
