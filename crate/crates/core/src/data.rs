//! Dataset ingestion, sliding windows, per-window min/max scaling,
//! chronological splits and SNR-controlled noise.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Default `ε` guard in the min/max scaling denominator.
pub const DEFAULT_NORM_EPS: f64 = 1e-8;

/// A multivariate series: T rows (time) by M feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub timestamps: Option<Vec<String>>,
    pub values: Matrix,
    pub feature_names: Vec<String>,
}

impl SeriesTable {
    pub fn new(values: Matrix, feature_names: Vec<String>) -> Result<Self> {
        if feature_names.len() != values.cols() {
            return Err(Error::InvalidDimension(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                values.cols()
            )));
        }
        Ok(Self {
            timestamps: None,
            values,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    /// Rows `start..end` as a new table.
    pub fn slice_rows(&self, start: usize, end: usize) -> SeriesTable {
        let m = self.n_features();
        let data = self.values.data()[start * m..end * m].to_vec();
        SeriesTable {
            timestamps: self.timestamps.as_ref().map(|t| t[start..end].to_vec()),
            values: Matrix::from_vec(end - start, m, data).expect("slice shape"),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Column selection for [`load_csv`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Name of a leading label column (e.g. `date`); never used as a feature.
    pub date_column: Option<String>,
    /// Feature columns to keep, in this order. `None` keeps all non-date columns.
    pub features: Option<Vec<String>>,
}

/// Reads a comma-separated file with a header row.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<SeriesTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let schema_err = |msg: String| Error::Schema {
        path: path.to_path_buf(),
        msg,
    };

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| schema_err(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let date_idx = match &schema.date_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| schema_err(format!("date column `{name}` not in header")))?,
        ),
        None => None,
    };
    let feature_idx: Vec<usize> = match &schema.features {
        Some(names) => names
            .iter()
            .map(|n| {
                headers
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| schema_err(format!("feature column `{n}` not in header")))
            })
            .collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|&i| Some(i) != date_idx)
            .collect(),
    };
    if feature_idx.is_empty() {
        return Err(schema_err("no feature columns".into()));
    }

    let mut stamps = Vec::new();
    let mut data = Vec::new();
    let mut n_rows = 0;
    for (r, record) in reader.records().enumerate() {
        // 1-based file line numbers: header is line 1
        let row = r + 2;
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row,
            col: 0,
            msg: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(schema_err(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        if let Some(d) = date_idx {
            stamps.push(record[d].trim().to_string());
        }
        for &c in &feature_idx {
            let cell = record[c].trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row,
                col: c + 1,
                msg: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    col: c + 1,
                    msg: format!("`{cell}` is not finite"),
                });
            }
            data.push(v);
        }
        n_rows += 1;
    }
    if n_rows < 2 {
        return Err(schema_err(format!("{n_rows} data rows, need at least 2")));
    }

    Ok(SeriesTable {
        timestamps: date_idx.map(|_| stamps),
        values: Matrix::from_vec(n_rows, feature_idx.len(), data)?,
        feature_names: feature_idx.iter().map(|&i| headers[i].clone()).collect(),
    })
}

/// Writes a table as CSV, with a leading `date` column when labels exist.
pub fn write_csv(table: &SeriesTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header: Vec<String> = Vec::new();
    if table.timestamps.is_some() {
        header.push("date".into());
    }
    header.extend(table.feature_names.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for i in 0..table.len() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(ts) = &table.timestamps {
            rec.push(ts[i].clone());
        }
        rec.extend(table.values.row(i).iter().map(|v| format!("{v}")));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One sample: `w` lookback rows followed by `h` horizon rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWindow {
    pub lookback: Matrix,
    pub horizon: Matrix,
    /// Row index of the last lookback observation.
    pub origin_index: usize,
}

/// Number of windows [`make_windows`] yields.
pub fn window_count(t: usize, w: usize, h: usize, stride: usize) -> usize {
    if t < w + h || stride == 0 {
        0
    } else {
        (t - w - h) / stride + 1
    }
}

/// Overlapping windows in chronological order.
pub fn make_windows(
    table: &SeriesTable,
    w: usize,
    h: usize,
    stride: usize,
) -> Result<Vec<TimeWindow>> {
    if w == 0 || h == 0 || stride == 0 {
        return Err(Error::InvalidParameter(format!(
            "window sizes must be ≥ 1 (w={w}, h={h}, stride={stride})"
        )));
    }
    let t = table.len();
    if t < w + h {
        return Err(Error::InsufficientData(format!(
            "{t} rows cannot hold lookback {w} + horizon {h}"
        )));
    }
    let m = table.n_features();
    let data = table.values.data();
    let windows = (0..window_count(t, w, h, stride))
        .map(|i| {
            let s = i * stride;
            TimeWindow {
                lookback: Matrix::from_vec(w, m, data[s * m..(s + w) * m].to_vec())
                    .expect("lookback shape"),
                horizon: Matrix::from_vec(h, m, data[(s + w) * m..(s + w + h) * m].to_vec())
                    .expect("horizon shape"),
                origin_index: s + w - 1,
            }
        })
        .collect();
    Ok(windows)
}

/// Target range of the min/max scaling, which is also the bin support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RangeMode {
    /// `[0, 1]`, for all-nonnegative data.
    #[default]
    ZeroOne,
    /// `[−1, 1]`.
    SymOne,
}

impl RangeMode {
    pub fn support(self) -> (f64, f64) {
        match self {
            RangeMode::ZeroOne => (0.0, 1.0),
            RangeMode::SymOne => (-1.0, 1.0),
        }
    }
}

/// Per-feature min/max scaling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub epsilon: f64,
    pub range_mode: RangeMode,
}

impl NormStats {
    fn span(&self, c: usize) -> f64 {
        self.x_max[c] - self.x_min[c] + self.epsilon
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.x_min.len() {
            return Err(Error::InvalidDimension(format!(
                "{} columns against stats for {} features",
                x.cols(),
                self.x_min.len()
            )));
        }
        Ok(())
    }
}

/// Per-feature min and max over the rows of `x` (one lookback window).
pub fn fit_norm(x: &Matrix, range_mode: RangeMode, epsilon: f64) -> Result<NormStats> {
    if x.rows() == 0 {
        return Err(Error::InsufficientData(
            "cannot fit scaling on zero rows".into(),
        ));
    }
    let m = x.cols();
    let mut x_min = vec![f64::INFINITY; m];
    let mut x_max = vec![f64::NEG_INFINITY; m];
    for i in 0..x.rows() {
        for (c, &v) in x.row(i).iter().enumerate() {
            x_min[c] = x_min[c].min(v);
            x_max[c] = x_max[c].max(v);
        }
    }
    Ok(NormStats {
        x_min,
        x_max,
        epsilon,
        range_mode,
    })
}

/// `(x − min)/(max − min + ε)`, then mapped to `[−1, 1]` as `2u − 1` in
/// symmetric mode.
pub fn normalize(x: &Matrix, stats: &NormStats) -> Result<Matrix> {
    stats.check(x)?;
    let mut out = x.clone();
    let m = x.cols();
    for (idx, v) in out.data_mut().iter_mut().enumerate() {
        let c = idx % m;
        let u = (*v - stats.x_min[c]) / stats.span(c);
        *v = match stats.range_mode {
            RangeMode::ZeroOne => u,
            RangeMode::SymOne => 2.0 * u - 1.0,
        };
    }
    Ok(out)
}

/// Algebraic inverse of [`normalize`].
pub fn denormalize(x_norm: &Matrix, stats: &NormStats) -> Result<Matrix> {
    stats.check(x_norm)?;
    let mut out = x_norm.clone();
    let m = x_norm.cols();
    for (idx, v) in out.data_mut().iter_mut().enumerate() {
        let c = idx % m;
        let u = match stats.range_mode {
            RangeMode::ZeroOne => *v,
            RangeMode::SymOne => (*v + 1.0) / 2.0,
        };
        *v = u * stats.span(c) + stats.x_min[c];
    }
    Ok(out)
}

/// Additive white noise at a target signal-to-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
    pub enabled: bool,
}

impl NoiseSpec {
    /// Noise variance `P_signal / 10^(snr_db/10)`.
    pub fn variance(&self, signal_power: f64) -> f64 {
        signal_power / 10f64.powf(self.snr_db / 10.0)
    }
}

/// Mean of squared values per column.
pub fn signal_power(values: &Matrix) -> Vec<f64> {
    let n = values.rows() as f64;
    (0..values.cols())
        .map(|c| {
            (0..values.rows())
                .map(|i| values[(i, c)].powi(2))
                .sum::<f64>()
                / n
        })
        .collect()
}

/// Adds zero-mean Gaussian noise to every feature at the configured SNR.
/// Disabled specs and an infinite SNR return the table unchanged.
pub fn inject_noise(table: &SeriesTable, spec: &NoiseSpec, rng: &mut Rng) -> SeriesTable {
    if !spec.enabled || spec.snr_db == f64::INFINITY {
        return table.clone();
    }
    let powers = signal_power(&table.values);
    let stds: Vec<f64> = powers.iter().map(|&p| spec.variance(p).sqrt()).collect();
    let mut out = table.clone();
    let m = table.n_features();
    for (idx, v) in out.values.data_mut().iter_mut().enumerate() {
        *v += stds[idx % m] * rng.standard_normal();
    }
    out
}

/// Train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "split fractions must be positive, got {parts:?}"
            )));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "split fractions {parts:?} do not sum to 1"
            )));
        }
        Ok(())
    }
}

/// Chronological contiguous split into (train, val, test).
pub fn split(
    table: &SeriesTable,
    ratios: &SplitRatios,
) -> Result<(SeriesTable, SeriesTable, SeriesTable)> {
    ratios.validate()?;
    let t = table.len();
    let n_train = (t as f64 * ratios.train + 1e-9).floor() as usize;
    let n_val = (t as f64 * ratios.val + 1e-9).floor() as usize;
    let b1 = n_train.min(t);
    let b2 = (n_train + n_val).min(t);
    Ok((
        table.slice_rows(0, b1),
        table.slice_rows(b1, b2),
        table.slice_rows(b2, t),
    ))
}

/// Parameters for the synthetic sinusoid/trend/noise generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureSpec {
    pub rows: usize,
    pub channels: usize,
    /// Sinusoid periods in time steps; each channel mixes all of them.
    pub periods: Vec<f64>,
    /// Constant level added to every channel.
    pub offset: f64,
    /// Linear drift per time step.
    pub trend: f64,
    /// Standard deviation of i.i.d. Gaussian noise (0 for noiseless).
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            rows: 2000,
            channels: 2,
            periods: vec![24.0, 48.0],
            offset: 3.0,
            trend: 0.0,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

/// Multi-sine series. Amplitudes and phases per (channel, period) come from
/// the seed.
pub fn generate_fixture(spec: &FixtureSpec) -> Result<SeriesTable> {
    if spec.rows == 0 || spec.channels == 0 || spec.periods.is_empty() {
        return Err(Error::InvalidParameter(
            "fixture needs rows, channels and at least one period".into(),
        ));
    }
    if spec.periods.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InvalidParameter(
            "fixture periods must be positive".into(),
        ));
    }
    let mut rng = Rng::substream(spec.seed, crate::numerics::Stream::Fixture);
    let shape: Vec<Vec<(f64, f64)>> = (0..spec.channels)
        .map(|_| {
            spec.periods
                .iter()
                .map(|_| {
                    (
                        rng.uniform(0.5, 1.0),
                        rng.uniform(0.0, std::f64::consts::TAU),
                    )
                })
                .collect()
        })
        .collect();
    let mut values = Matrix::zeros(spec.rows, spec.channels);
    for t in 0..spec.rows {
        for (c, terms) in shape.iter().enumerate() {
            let mut v = spec.offset + spec.trend * t as f64;
            for (&(amp, phase), &period) in terms.iter().zip(&spec.periods) {
                v += amp * (std::f64::consts::TAU * t as f64 / period + phase).sin();
            }
            if spec.noise_std > 0.0 {
                v += spec.noise_std * rng.standard_normal();
            }
            values[(t, c)] = v;
        }
    }
    let names = (0..spec.channels).map(|c| format!("f{c}")).collect();
    let mut table = SeriesTable::new(values, names)?;
    table.timestamps = Some((0..spec.rows).map(|t| t.to_string()).collect());
    Ok(table)
}
