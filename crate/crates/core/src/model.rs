//! Decomposition-linear forecaster with an ordinal softmax head.
//!
//! Each channel's lookback column is split into a moving-average trend and a
//! seasonal remainder, each projected to the horizon by its own H×w matrix.
//! Every projected scalar is then mapped to K bin logits by a linear head.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{softmax, Matrix, Rng};
use crate::prob::ProbGrid;

/// Default moving-average width.
pub const DEFAULT_MA_WINDOW: usize = 25;

/// Default half-width of the uniform jitter added to the averaging init.
pub const DEFAULT_INIT_JITTER: f64 = 1e-2;

const CHECKPOINT_VERSION: u32 = 1;

/// How head weights relate to channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// One K-vector of weights shared by all channels.
    #[default]
    Shared,
    /// A K×M weight matrix; channel c uses column c.
    Joint,
}

impl std::str::FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(HeadKind::Shared),
            "joint" => Ok(HeadKind::Joint),
            other => Err(Error::Config(format!("unknown head `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    /// Lookback length.
    pub w: usize,
    /// Horizon length.
    pub h: usize,
    /// Channels.
    pub m: usize,
    /// Bins.
    pub k: usize,
    /// Moving-average width (odd, at most `w`).
    pub ma_window: usize,
    pub head: HeadKind,
}

impl ModelShape {
    pub fn validate(&self) -> Result<()> {
        if self.w == 0 || self.h == 0 || self.m == 0 || self.k < 2 {
            return Err(Error::InvalidParameter(format!(
                "model shape needs w, h, m ≥ 1 and k ≥ 2: {self:?}"
            )));
        }
        if self.ma_window.is_multiple_of(2) || self.ma_window == 0 || self.ma_window > self.w {
            return Err(Error::InvalidParameter(format!(
                "moving-average window must be odd and in 1..={}, got {}",
                self.w, self.ma_window
            )));
        }
        Ok(())
    }

    pub fn head_cols(&self) -> usize {
        match self.head {
            HeadKind::Shared => 1,
            HeadKind::Joint => self.m,
        }
    }

    /// `2·H·w + K·cols + K`.
    pub fn param_count(&self) -> usize {
        2 * self.h * self.w + self.k * self.head_cols() + self.k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub shape: ModelShape,
    /// Trend projection, H×w.
    pub w_t: Matrix,
    /// Seasonal projection, H×w.
    pub w_s: Matrix,
    /// Head weights, K×1 (shared) or K×M (joint).
    pub w_o: Matrix,
    /// Head bias, length K.
    pub b_o: Vec<f64>,
}

/// Averaging-map init plus uniform jitter for the projections; head weights
/// uniform in `±1/√K`; zero bias.
pub fn init_params(shape: ModelShape, rng: &mut Rng, jitter: f64) -> Result<ModelParams> {
    shape.validate()?;
    let avg = 1.0 / shape.w as f64;
    let mut proj = || {
        let mut m = Matrix::zeros(shape.h, shape.w);
        for v in m.data_mut() {
            *v = avg
                + if jitter > 0.0 {
                    rng.uniform(-jitter, jitter)
                } else {
                    0.0
                };
        }
        m
    };
    let w_t = proj();
    let w_s = proj();
    let bound = 1.0 / (shape.k as f64).sqrt();
    let mut w_o = Matrix::zeros(shape.k, shape.head_cols());
    for v in w_o.data_mut() {
        *v = rng.uniform(-bound, bound);
    }
    Ok(ModelParams {
        shape,
        w_t,
        w_s,
        w_o,
        b_o: vec![0.0; shape.k],
    })
}

/// Centered moving average with edge-replicated padding; returns
/// `(trend, seasonal)` with `seasonal = x − trend`.
pub fn decompose(x: &Matrix, ma_window: usize) -> Result<(Matrix, Matrix)> {
    let (w, m) = x.shape();
    if ma_window.is_multiple_of(2) || ma_window == 0 || ma_window > w {
        return Err(Error::InvalidParameter(format!(
            "moving-average window must be odd and in 1..={w}, got {ma_window}"
        )));
    }
    let r = (ma_window - 1) / 2;
    let mut trend = Matrix::zeros(w, m);
    if ma_window == 1 {
        trend = x.clone();
    } else {
        let inv = 1.0 / ma_window as f64;
        for c in 0..m {
            for i in 0..w {
                let mut s = 0.0;
                for off in 0..ma_window {
                    let j = (i + off).saturating_sub(r).min(w - 1);
                    s += x[(j, c)];
                }
                trend[(i, c)] = s * inv;
            }
        }
    }
    let seasonal = x.sub(&trend)?;
    Ok((trend, seasonal))
}

/// Model output for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    /// H×M projected values in normalized space.
    pub point: Matrix,
    /// One bin distribution per (step, channel).
    pub probs: ProbGrid,
}

/// Intermediate values kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct ForwardCache {
    pub trend: Matrix,
    pub seasonal: Matrix,
    pub forecast: Forecast,
}

impl ModelParams {
    /// Head logits for a projected scalar on channel `c`.
    pub fn head_logits(&self, value: f64, channel: usize) -> Vec<f64> {
        let col = match self.shape.head {
            HeadKind::Shared => 0,
            HeadKind::Joint => channel,
        };
        (0..self.shape.k)
            .map(|k| self.w_o[(k, col)] * value + self.b_o[k])
            .collect()
    }

    pub(crate) fn forward_cached(&self, x_norm: &Matrix) -> Result<ForwardCache> {
        let s = &self.shape;
        if x_norm.shape() != (s.w, s.m) {
            return Err(Error::InvalidDimension(format!(
                "input {:?}, model expects ({}, {})",
                x_norm.shape(),
                s.w,
                s.m
            )));
        }
        let (trend, seasonal) = decompose(x_norm, s.ma_window)?;
        let point = self.w_t.matmul(&trend)?.add(&self.w_s.matmul(&seasonal)?)?;
        let mut cells = Vec::with_capacity(s.h * s.m);
        for j in 0..s.h {
            for c in 0..s.m {
                cells.push(softmax(&self.head_logits(point[(j, c)], c))?);
            }
        }
        let probs = ProbGrid::new(s.h, s.m, cells)?;
        Ok(ForwardCache {
            trend,
            seasonal,
            forecast: Forecast { point, probs },
        })
    }
}

pub fn forward(params: &ModelParams, x_norm: &Matrix) -> Result<Forecast> {
    params.forward_cached(x_norm).map(|c| c.forecast)
}

/// Flat view: `W_t` row-major, `W_s` row-major, `W_o` row-major, `b_o`.
pub fn param_vector(params: &ModelParams) -> Vec<f64> {
    let mut v = Vec::with_capacity(params.shape.param_count());
    v.extend_from_slice(params.w_t.data());
    v.extend_from_slice(params.w_s.data());
    v.extend_from_slice(params.w_o.data());
    v.extend_from_slice(&params.b_o);
    v
}

/// Inverse of [`param_vector`] for the shape of `params`.
pub fn load_param_vector(params: &ModelParams, v: &[f64]) -> Result<ModelParams> {
    let s = params.shape;
    if v.len() != s.param_count() {
        return Err(Error::InvalidDimension(format!(
            "parameter vector of length {}, model has {}",
            v.len(),
            s.param_count()
        )));
    }
    let hw = s.h * s.w;
    let ko = s.k * s.head_cols();
    Ok(ModelParams {
        shape: s,
        w_t: Matrix::from_vec(s.h, s.w, v[..hw].to_vec())?,
        w_s: Matrix::from_vec(s.h, s.w, v[hw..2 * hw].to_vec())?,
        w_o: Matrix::from_vec(s.k, s.head_cols(), v[2 * hw..2 * hw + ko].to_vec())?,
        b_o: v[2 * hw + ko..].to_vec(),
    })
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    shape: ModelShape,
    params: Vec<f64>,
}

/// Writes a JSON checkpoint: version, shape header, flat parameter vector.
pub fn save_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        shape: params.shape,
        params: param_vector(params),
    };
    let text = serde_json::to_string(&ck).map_err(|e| Error::InvalidInput(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            msg: format!("unsupported checkpoint version {}", ck.version),
        });
    }
    ck.shape.validate()?;
    let template = ModelParams {
        shape: ck.shape,
        w_t: Matrix::zeros(ck.shape.h, ck.shape.w),
        w_s: Matrix::zeros(ck.shape.h, ck.shape.w),
        w_o: Matrix::zeros(ck.shape.k, ck.shape.head_cols()),
        b_o: vec![0.0; ck.shape.k],
    };
    load_param_vector(&template, &ck.params)
}
