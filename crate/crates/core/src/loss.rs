//! Cross-entropy and ordinal cross-entropy over bin distributions, with
//! exact gradients with respect to softmax logits.
//!
//! The ordinal loss is a sum of binary cross-entropies, one per threshold
//! `k = 1..K−1`, between the true and predicted cumulative probabilities
//! `P(Y ≤ k)`. Upper tails `P(Y > k)` are summed from the right rather than
//! formed as `1 − P(Y ≤ k)`, which keeps them accurate near one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::softmax;
use crate::prob::{ProbGrid, ProbVector};

pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Base10,
}

impl LogBase {
    fn convert_nats(self, v: f64) -> f64 {
        match self {
            LogBase::Natural => v,
            LogBase::Base10 => v / std::f64::consts::LN_10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub value: f64,
    pub log_base: LogBase,
}

/// Lower bound applied to every probability before taking its log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampPolicy {
    pub floor: f64,
}

impl Default for ClampPolicy {
    fn default() -> Self {
        Self {
            floor: DEFAULT_FLOOR,
        }
    }
}

impl ClampPolicy {
    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.floor, 1.0 - self.floor)
    }

    fn is_clamped(&self, v: f64) -> bool {
        v < self.floor || v > 1.0 - self.floor
    }
}

/// Which loss drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Oce,
    Ce,
}

impl LossKind {
    /// Natural-log loss of `q` against `p`.
    pub fn value(self, p: &ProbVector, q: &ProbVector, clamp: ClampPolicy) -> Result<f64> {
        match self {
            LossKind::Oce => oce_with(p, q, LogBase::Natural, clamp).map(|l| l.value),
            LossKind::Ce => ce_with(p, q, LogBase::Natural, clamp).map(|l| l.value),
        }
    }

    /// Gradient of [`LossKind::value`] at `q = softmax(logits)` with respect
    /// to the logits, given the already computed `q`.
    pub fn grad_logits_at(
        self,
        p: &ProbVector,
        q: &ProbVector,
        clamp: ClampPolicy,
    ) -> Result<Vec<f64>> {
        match self {
            LossKind::Oce => oce_grad_from_probs(p, q, clamp),
            LossKind::Ce => ce_grad_from_probs(p, q, clamp),
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oce" => Ok(LossKind::Oce),
            "ce" => Ok(LossKind::Ce),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Oce => "oce",
            LossKind::Ce => "ce",
        })
    }
}

fn check_k(p: &ProbVector, q: &ProbVector) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::InvalidDimension(format!(
            "K mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// `−Σ p_k log q_k` with the default floor.
pub fn ce(p: &ProbVector, q: &ProbVector, base: LogBase) -> Result<LossValue> {
    ce_with(p, q, base, ClampPolicy::default())
}

pub fn ce_with(
    p: &ProbVector,
    q: &ProbVector,
    base: LogBase,
    clamp: ClampPolicy,
) -> Result<LossValue> {
    check_k(p, q)?;
    let nats: f64 = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .filter(|(&pk, _)| pk > 0.0)
        .map(|(&pk, &qk)| -pk * qk.max(clamp.floor).ln())
        .sum();
    Ok(LossValue {
        value: base.convert_nats(nats),
        log_base: base,
    })
}

/// Shannon entropy `−Σ p log p` in nats.
pub fn entropy(p: &ProbVector) -> f64 {
    p.as_slice()
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln())
        .sum()
}

/// Prefix sums `Σ_{i≤k} q_i` for `k = 1..K−1`, clamped to `[floor, 1−floor]`.
pub fn cumsum_head(q: &ProbVector) -> Result<Vec<f64>> {
    cumsum_head_with(q, ClampPolicy::default())
}

pub fn cumsum_head_with(q: &ProbVector, clamp: ClampPolicy) -> Result<Vec<f64>> {
    if q.len() < 2 {
        return Err(Error::InvalidDimension(format!(
            "cumulative head needs K ≥ 2, got {}",
            q.len()
        )));
    }
    Ok(prefix_sums(q.as_slice())
        .into_iter()
        .map(|c| clamp.clamp(c))
        .collect())
}

/// Unclamped `Σ_{i≤k} v_i` for `k = 1..K−1`.
fn prefix_sums(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    v[..v.len() - 1]
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// Unclamped `Σ_{i>k} v_i` for `k = 1..K−1`.
fn suffix_sums(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let mut out = vec![0.0; k - 1];
    let mut acc = 0.0;
    for i in (1..k).rev() {
        acc += v[i];
        out[i - 1] = acc;
    }
    out
}

/// Ordinal cross-entropy with the default floor.
pub fn oce(p: &ProbVector, q: &ProbVector, base: LogBase) -> Result<LossValue> {
    oce_with(p, q, base, ClampPolicy::default())
}

pub fn oce_with(
    p: &ProbVector,
    q: &ProbVector,
    base: LogBase,
    clamp: ClampPolicy,
) -> Result<LossValue> {
    check_k(p, q)?;
    if p.len() < 2 {
        return Err(Error::InvalidDimension("ordinal loss needs K ≥ 2".into()));
    }
    let pc = prefix_sums(p.as_slice());
    let ps = suffix_sums(p.as_slice());
    let qc = prefix_sums(q.as_slice());
    let qs = suffix_sums(q.as_slice());
    let mut nats = 0.0;
    for k in 0..pc.len() {
        if pc[k] > 0.0 {
            nats -= pc[k] * clamp.clamp(qc[k]).ln();
        }
        if ps[k] > 0.0 {
            nats -= ps[k] * clamp.clamp(qs[k]).ln();
        }
    }
    Ok(LossValue {
        value: base.convert_nats(nats),
        log_base: base,
    })
}

/// Gradient of the natural-log ordinal loss `oce(p, softmax(logits))` with
/// respect to `logits`.
pub fn oce_grad_logits(p: &ProbVector, logits: &[f64]) -> Result<Vec<f64>> {
    let q = softmax(logits)?;
    oce_grad_from_probs(p, &q, ClampPolicy::default())
}

/// With `C_k`, `S_k` the predicted lower/upper cumulatives and `P_k` the true
/// lower cumulative, the logit gradient is
/// `q_j [ Σ_{k≥j} (C_k − P_k)/C_k − Σ_{k<j} (C_k − P_k)/S_k ]`.
/// Thresholds whose predicted cumulative is clamped contribute nothing.
fn oce_grad_from_probs(p: &ProbVector, q: &ProbVector, clamp: ClampPolicy) -> Result<Vec<f64>> {
    check_k(p, q)?;
    let k = q.len();
    if k < 2 {
        return Err(Error::InvalidDimension("ordinal loss needs K ≥ 2".into()));
    }
    let pc = prefix_sums(p.as_slice());
    let ps = suffix_sums(p.as_slice());
    let qc = prefix_sums(q.as_slice());
    let qs = suffix_sums(q.as_slice());

    // ratios over thresholds t = 0..K−2
    let mut lower = vec![0.0; k - 1];
    let mut upper = vec![0.0; k - 1];
    for t in 0..k - 1 {
        if clamp.is_clamped(qc[t]) || clamp.is_clamped(qs[t]) {
            continue;
        }
        // C − P computed as a difference of upper tails when that is smaller
        let diff = if qc[t] < 0.5 {
            qc[t] - pc[t]
        } else {
            ps[t] - qs[t]
        };
        lower[t] = diff / qc[t];
        upper[t] = diff / qs[t];
    }
    // j is 0-based; thresholds t ≥ j enter via `lower`, t < j via `upper`
    let mut tail_lower = vec![0.0; k];
    for t in (0..k - 1).rev() {
        tail_lower[t] = tail_lower[t + 1] + lower[t];
    }
    let mut head_upper = 0.0;
    let mut grad = vec![0.0; k];
    for j in 0..k {
        if j > 0 {
            head_upper += upper[j - 1];
        }
        grad[j] = q[j] * (tail_lower[j] - head_upper);
    }
    Ok(grad)
}

/// Gradient of the natural-log `ce(p, softmax(logits))` with respect to `logits`.
pub fn ce_grad_logits(p: &ProbVector, logits: &[f64]) -> Result<Vec<f64>> {
    let q = softmax(logits)?;
    ce_grad_from_probs(p, &q, ClampPolicy::default())
}

fn ce_grad_from_probs(p: &ProbVector, q: &ProbVector, clamp: ClampPolicy) -> Result<Vec<f64>> {
    check_k(p, q)?;
    let live_mass: f64 = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .filter(|(_, &qk)| qk >= clamp.floor)
        .map(|(&pk, _)| pk)
        .sum();
    Ok(p.as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(&pk, &qk)| {
            let direct = if qk >= clamp.floor { -pk } else { 0.0 };
            direct + qk * live_mass
        })
        .collect())
}

/// Mean loss over every (sample, step, channel) cell of congruent grids.
pub fn batch_objective(
    targets: &[ProbGrid],
    predictions: &[ProbGrid],
    kind: LossKind,
    clamp: ClampPolicy,
) -> Result<LossValue> {
    if targets.len() != predictions.len() || targets.is_empty() {
        return Err(Error::InvalidDimension(format!(
            "{} target grids against {} prediction grids",
            targets.len(),
            predictions.len()
        )));
    }
    let mut total = 0.0;
    let mut cells = 0usize;
    for (t, p) in targets.iter().zip(predictions) {
        if t.shape() != p.shape() {
            return Err(Error::InvalidDimension(format!(
                "grid shapes {:?} and {:?}",
                t.shape(),
                p.shape()
            )));
        }
        for (pt, pp) in t.cells().iter().zip(p.cells()) {
            total += kind.value(pt, pp, clamp)?;
            cells += 1;
        }
    }
    Ok(LossValue {
        value: total / cells as f64,
        log_base: LogBase::Natural,
    })
}
