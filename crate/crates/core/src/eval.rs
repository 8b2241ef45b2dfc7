//! Point reconstruction from bin distributions, forecast metrics and
//! critical-difference arithmetic for cross-model comparisons.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::prob::{ProbGrid, ProbVector};
use crate::targetdist::BinScheme;

/// Probability-weighted mean of bin centers.
pub fn reconstruct(probs: &ProbVector, bins: &BinScheme) -> Result<f64> {
    if probs.len() != bins.k() {
        return Err(Error::InvalidDimension(format!(
            "{} probabilities for {} bins",
            probs.len(),
            bins.k()
        )));
    }
    Ok(probs
        .as_slice()
        .iter()
        .zip(bins.centers())
        .map(|(q, v)| q * v)
        .sum())
}

/// Reconstructs every cell of a grid into an H×M matrix.
pub fn reconstruct_grid(grid: &ProbGrid, bins: &BinScheme) -> Result<Matrix> {
    let (h, m) = grid.shape();
    let mut out = Matrix::zeros(h, m);
    for j in 0..h {
        for c in 0..m {
            out[(j, c)] = reconstruct(grid.get(j, c), bins)?;
        }
    }
    Ok(out)
}

/// Repeats the last lookback row across the horizon.
pub fn persistence_forecast(lookback: &Matrix, h: usize) -> Result<Matrix> {
    if lookback.rows() == 0 {
        return Err(Error::InvalidDimension("empty lookback".into()));
    }
    let last = lookback.row(lookback.rows() - 1).to_vec();
    let rows: Vec<Vec<f64>> = (0..h).map(|_| last.clone()).collect();
    Matrix::from_rows(&rows)
}

/// Divisor applied to summed errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by H only.
    PerHorizon,
    /// Divide by H·M.
    #[default]
    PerElement,
}

impl Normalization {
    fn divisor(self, h: usize, m: usize) -> f64 {
        match self {
            Normalization::PerHorizon => h as f64,
            Normalization::PerElement => (h * m) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub mse: f64,
    pub mae: f64,
}

fn check_congruent(y: &Matrix, yhat: &Matrix) -> Result<()> {
    if y.shape() != yhat.shape() {
        return Err(Error::InvalidDimension(format!(
            "y {:?} against prediction {:?}",
            y.shape(),
            yhat.shape()
        )));
    }
    if y.rows() == 0 || y.cols() == 0 {
        return Err(Error::InvalidDimension("empty forecast".into()));
    }
    Ok(())
}

pub fn metrics(y: &Matrix, yhat: &Matrix, norm: Normalization) -> Result<MetricPair> {
    check_congruent(y, yhat)?;
    let (mut sq, mut abs) = (0.0, 0.0);
    for (a, b) in y.data().iter().zip(yhat.data()) {
        let d = a - b;
        sq += d * d;
        abs += d.abs();
    }
    let n = norm.divisor(y.rows(), y.cols());
    Ok(MetricPair {
        mse: sq / n,
        mae: abs / n,
    })
}

/// `(1/H)‖Y − Ŷ‖_F²`
pub fn mse(y: &Matrix, yhat: &Matrix) -> Result<f64> {
    Ok(metrics(y, yhat, Normalization::PerHorizon)?.mse)
}

/// `(1/H) Σ_j ‖y_j − ŷ_j‖₁`
pub fn mae(y: &Matrix, yhat: &Matrix) -> Result<f64> {
    Ok(metrics(y, yhat, Normalization::PerHorizon)?.mae)
}

pub fn mse_per_element(y: &Matrix, yhat: &Matrix) -> Result<f64> {
    Ok(metrics(y, yhat, Normalization::PerElement)?.mse)
}

pub fn mae_per_element(y: &Matrix, yhat: &Matrix) -> Result<f64> {
    Ok(metrics(y, yhat, Normalization::PerElement)?.mae)
}

/// Accumulates errors across many windows, weighting every element equally.
#[derive(Debug, Clone, Default)]
pub struct MetricAccumulator {
    sq: f64,
    abs: f64,
    elements: usize,
    steps: usize,
}

impl MetricAccumulator {
    pub fn push(&mut self, y: &Matrix, yhat: &Matrix) -> Result<()> {
        check_congruent(y, yhat)?;
        for (a, b) in y.data().iter().zip(yhat.data()) {
            let d = a - b;
            self.sq += d * d;
            self.abs += d.abs();
        }
        self.elements += y.rows() * y.cols();
        self.steps += y.rows();
        Ok(())
    }

    pub fn finish(&self, norm: Normalization) -> Result<MetricPair> {
        if self.elements == 0 {
            return Err(Error::InsufficientData("no windows evaluated".into()));
        }
        let n = match norm {
            Normalization::PerHorizon => self.steps,
            Normalization::PerElement => self.elements,
        } as f64;
        Ok(MetricPair {
            mse: self.sq / n,
            mae: self.abs / n,
        })
    }
}

/// Inputs to the Nemenyi critical distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceConfig {
    pub k_algorithms: usize,
    pub n_datasets: usize,
    /// Studentized-range critical value at the chosen α, from a table.
    pub q_alpha: f64,
}

impl SignificanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_algorithms < 2 || self.n_datasets < 1 || !(self.q_alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need k ≥ 2, N ≥ 1, q_alpha > 0 (got k={}, N={}, q={})",
                self.k_algorithms, self.n_datasets, self.q_alpha
            )));
        }
        Ok(())
    }
}

/// `CD = q_α √(k(k+1)/(6N))`
pub fn nemenyi_cd(cfg: &SignificanceConfig) -> Result<f64> {
    cfg.validate()?;
    let k = cfg.k_algorithms as f64;
    let n = cfg.n_datasets as f64;
    Ok(cfg.q_alpha * (k * (k + 1.0) / (6.0 * n)).sqrt())
}

/// Average rank of each algorithm (rows) across datasets (columns).
/// Tied scores share the mean of the ranks they span.
pub fn rank_table(scores: &Matrix, lower_is_better: bool) -> Result<Vec<f64>> {
    let (k, n) = scores.shape();
    if k == 0 || n == 0 {
        return Err(Error::InvalidDimension("empty score matrix".into()));
    }
    if scores.data().iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in score matrix".into()));
    }
    let mut totals = vec![0.0; k];
    for d in 0..n {
        let col = scores.col(d);
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&a, &b| {
            let ord = col[a].partial_cmp(&col[b]).expect("no NaN");
            if lower_is_better {
                ord
            } else {
                ord.reverse()
            }
        });
        let mut i = 0;
        while i < k {
            let mut j = i + 1;
            while j < k && col[idx[j]] == col[idx[i]] {
                j += 1;
            }
            // positions i..j hold ranks i+1..=j
            let avg = (i + 1 + j) as f64 / 2.0;
            for &a in &idx[i..j] {
                totals[a] += avg;
            }
            i = j;
        }
    }
    Ok(totals.into_iter().map(|t| t / n as f64).collect())
}

/// Score matrix read from CSV: header names algorithms, each row is a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub algorithms: Vec<String>,
    /// algorithms × datasets
    pub scores: Matrix,
}

pub fn read_scores_csv(path: impl AsRef<Path>) -> Result<ScoreTable> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let algorithms: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row_no = i + 2;
        if rec.len() != algorithms.len() {
            return Err(Error::Parse {
                path: path.into(),
                row: row_no,
                col: rec.len().min(algorithms.len()) + 1,
                msg: format!("expected {} fields, found {}", algorithms.len(), rec.len()),
            });
        }
        let mut row = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            row.push(field.parse::<f64>().map_err(|e| Error::Parse {
                path: path.into(),
                row: row_no,
                col: c + 1,
                msg: format!("{field:?}: {e}"),
            })?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Schema {
            path: path.into(),
            msg: "no dataset rows".into(),
        });
    }
    Ok(ScoreTable {
        algorithms,
        scores: Matrix::from_rows(&rows)?.transpose(),
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema {
            path: path.into(),
            msg: format!("{other:?}"),
        },
    }
}

/// Metrics document written per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub dataset: String,
    pub horizon: usize,
    pub lookback: usize,
    pub loss: String,
    pub tpt: String,
    pub seed: u64,
    pub mse: f64,
    pub mae: f64,
    pub normalization: Normalization,
}
