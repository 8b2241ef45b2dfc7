//! Training loop: sample preparation, analytic backpropagation through the
//! linear model, Adam updates, validation-driven learning-rate decay and
//! early stopping with best-epoch restoration.

use serde::{Deserialize, Serialize};

use crate::data::{fit_norm, normalize, NormStats, RangeMode, TimeWindow};
use crate::error::{Error, Result};
use crate::loss::{ClampPolicy, LossKind};
use crate::model::{load_param_vector, param_vector, ModelParams};
use crate::numerics::{Matrix, Rng, Stream};
use crate::prob::ProbGrid;
use crate::targetdist::{encode, BinScheme, TargetDistSpec};

/// Which statistics scale the horizon targets before encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetScaling {
    /// Lookback statistics, clamped into the bin support. Matches how
    /// predictions are mapped back to data units.
    #[default]
    Lookback,
    /// The horizon's own min/max.
    Horizon,
}

/// Scaling options shared by training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub range_mode: RangeMode,
    pub epsilon: f64,
    pub target: TargetScaling,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            range_mode: RangeMode::ZeroOne,
            epsilon: crate::data::DEFAULT_NORM_EPS,
            target: TargetScaling::Lookback,
        }
    }
}

/// A window ready for the model: scaled input and encoded targets.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub x_norm: Matrix,
    pub targets: ProbGrid,
    /// Lookback statistics, used to map predictions back to data units.
    pub stats: NormStats,
}

/// Scales a window and encodes every horizon value into a bin distribution.
/// `global` replaces per-window lookback statistics when set.
pub fn prepare_sample(
    window: &TimeWindow,
    scaling: &ScalingConfig,
    global: Option<&NormStats>,
    bins: &BinScheme,
    tpt: &TargetDistSpec,
) -> Result<PreparedSample> {
    let stats = match global {
        Some(s) => s.clone(),
        None => fit_norm(&window.lookback, scaling.range_mode, scaling.epsilon)?,
    };
    let x_norm = normalize(&window.lookback, &stats)?;
    let y_norm = match (scaling.target, global) {
        (TargetScaling::Horizon, None) => normalize(
            &window.horizon,
            &fit_norm(&window.horizon, scaling.range_mode, scaling.epsilon)?,
        )?,
        _ => normalize(&window.horizon, &stats)?,
    };
    let (a, b) = bins.support();
    let (h, m) = y_norm.shape();
    let mut cells = Vec::with_capacity(h * m);
    for j in 0..h {
        for c in 0..m {
            cells.push(encode(y_norm[(j, c)].clamp(a, b), bins, tpt)?);
        }
    }
    Ok(PreparedSample {
        x_norm,
        targets: ProbGrid::new(h, m, cells)?,
        stats,
    })
}

/// Mean loss over all cells of `batch`.
pub fn objective(
    params: &ModelParams,
    batch: &[PreparedSample],
    kind: LossKind,
    clamp: ClampPolicy,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InsufficientData(
            "objective over an empty batch".into(),
        ));
    }
    let mut total = 0.0;
    let mut cells = 0usize;
    for s in batch {
        let f = params.forward_cached(&s.x_norm)?.forecast;
        check_targets(&s.targets, &f.probs)?;
        for (p, q) in s.targets.cells().iter().zip(f.probs.cells()) {
            total += kind.value(p, q, clamp)?;
            cells += 1;
        }
    }
    Ok(total / cells as f64)
}

fn check_targets(targets: &ProbGrid, probs: &ProbGrid) -> Result<()> {
    if targets.shape() != probs.shape() {
        return Err(Error::InvalidDimension(format!(
            "targets {:?} against predictions {:?}",
            targets.shape(),
            probs.shape()
        )));
    }
    Ok(())
}

/// Objective value and its exact gradient in [`param_vector`] order.
pub fn backward(
    params: &ModelParams,
    batch: &[PreparedSample],
    kind: LossKind,
    clamp: ClampPolicy,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InsufficientData("gradient of an empty batch".into()));
    }
    let s = params.shape;
    let cols = s.head_cols();
    let scale = 1.0 / (batch.len() * s.h * s.m) as f64;

    let mut d_wt = Matrix::zeros(s.h, s.w);
    let mut d_ws = Matrix::zeros(s.h, s.w);
    let mut d_wo = Matrix::zeros(s.k, cols);
    let mut d_bo = vec![0.0; s.k];
    let mut total = 0.0;

    for sample in batch {
        let cache = params.forward_cached(&sample.x_norm)?;
        let f = &cache.forecast;
        check_targets(&sample.targets, &f.probs)?;
        // dL/d(point), H×M
        let mut d_point = Matrix::zeros(s.h, s.m);
        for j in 0..s.h {
            for c in 0..s.m {
                let p = sample.targets.get(j, c);
                let q = f.probs.get(j, c);
                total += kind.value(p, q, clamp)?;
                let gz = kind.grad_logits_at(p, q, clamp)?;
                let col = if cols == 1 { 0 } else { c };
                let y = f.point[(j, c)];
                let mut dy = 0.0;
                for k in 0..s.k {
                    let g = gz[k] * scale;
                    d_bo[k] += g;
                    d_wo[(k, col)] += g * y;
                    dy += params.w_o[(k, col)] * g;
                }
                d_point[(j, c)] = dy;
            }
        }
        // point = W_t·trend + W_s·seasonal  ⇒  dW = d_point · componentᵀ
        for j in 0..s.h {
            for i in 0..s.w {
                let mut gt = 0.0;
                let mut gs = 0.0;
                for c in 0..s.m {
                    gt += d_point[(j, c)] * cache.trend[(i, c)];
                    gs += d_point[(j, c)] * cache.seasonal[(i, c)];
                }
                d_wt[(j, i)] += gt;
                d_ws[(j, i)] += gs;
            }
        }
    }

    let mut grad = Vec::with_capacity(s.param_count());
    grad.extend_from_slice(d_wt.data());
    grad.extend_from_slice(d_ws.data());
    grad.extend_from_slice(d_wo.data());
    grad.extend_from_slice(&d_bo);
    Ok((total * scale, grad))
}

/// First/second moment estimates for Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    if params.len() != grad.len() || state.m.len() != grad.len() {
        return Err(Error::InvalidDimension(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grad.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Epochs without validation improvement before stopping; `None` never stops.
    pub patience: Option<usize>,
    /// Learning-rate multiplier after an epoch without improvement.
    pub lr_decay: f64,
    pub seed: u64,
    pub shuffle: bool,
    pub loss: LossKind,
    pub clamp: ClampPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 15,
            lr: 0.005,
            patience: Some(5),
            lr_decay: 0.5,
            seed: 0,
            shuffle: true,
            loss: LossKind::Oce,
            clamp: ClampPolicy::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidParameter(
                "batch_size and epochs must be ≥ 1".into(),
            ));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "learning rate {} must be ≥ 0",
                self.lr
            )));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lr_decay {} must lie in (0, 1]",
                self.lr_decay
            )));
        }
        if self.patience == Some(0) {
            return Err(Error::InvalidParameter("patience must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Validation objective of the initial parameters.
    pub initial_val_loss: Option<f64>,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_loss: Option<f64>,
    pub stopped_early: bool,
    /// FNV-1a over the bit patterns of the final parameters.
    pub params_checksum: String,
    pub lr_schedule: String,
}

impl TrainReport {
    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn val_losses(&self) -> Vec<f64> {
        self.epochs.iter().filter_map(|e| e.val_loss).collect()
    }

    /// Line-delimited JSON, one record per epoch.
    pub fn log_lines(&self) -> String {
        self.epochs
            .iter()
            .map(|e| serde_json::to_string(e).expect("serializable record") + "\n")
            .collect()
    }
}

pub fn params_checksum(v: &[f64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in v {
        for b in x.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// Trains `params` on `train`, using `val` for learning-rate decay and early
/// stopping. With an empty validation set every epoch runs and the last
/// parameters are returned.
pub fn fit(
    params: ModelParams,
    train: &[PreparedSample],
    val: &[PreparedSample],
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    let mut theta = param_vector(&params);
    let mut model = params;
    let mut adam = AdamState::new(theta.len());
    let mut rng = Rng::substream(cfg.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut lr = cfg.lr;

    let initial_val_loss = if val.is_empty() {
        None
    } else {
        Some(objective(&model, val, cfg.loss, cfg.clamp)?)
    };

    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut since_best = 0usize;
    let mut stopped_early = false;
    let mut batch: Vec<PreparedSample> = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            rng.shuffle(&mut order);
        }
        let mut weighted = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i].clone()));
            let (loss, grad) = backward(&model, &batch, cfg.loss, cfg.clamp)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Invariant(format!(
                    "non-finite loss or gradient in epoch {epoch}"
                )));
            }
            weighted += loss * chunk.len() as f64;
            adam_step(&mut adam, &mut theta, &grad, lr)?;
            model = load_param_vector(&model, &theta)?;
        }
        let train_loss = weighted / train.len() as f64;

        let val_loss = if val.is_empty() {
            None
        } else {
            Some(objective(&model, val, cfg.loss, cfg.clamp)?)
        };
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr,
        });

        if let Some(v) = val_loss {
            match &best {
                Some((b, _, _)) if v >= *b => {
                    since_best += 1;
                    lr *= cfg.lr_decay;
                }
                _ => {
                    best = Some((v, epoch, theta.clone()));
                    since_best = 0;
                }
            }
            if cfg.patience.is_some_and(|p| since_best >= p) {
                stopped_early = true;
                break;
            }
        }
    }

    let (best_epoch, best_val_loss) = match best {
        Some((v, e, t)) => {
            theta = t;
            model = load_param_vector(&model, &theta)?;
            (e, Some(v))
        }
        None => (epochs.len(), None),
    };

    let report = TrainReport {
        initial_val_loss,
        epochs,
        best_epoch,
        best_val_loss,
        stopped_early,
        params_checksum: params_checksum(&theta),
        lr_schedule: format!(
            "multiply by {} after each epoch without validation improvement",
            cfg.lr_decay
        ),
    };
    Ok((model, report))
}
