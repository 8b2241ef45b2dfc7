//! Declarative experiment configuration with dotted-key overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{FixtureSpec, RangeMode, SplitRatios, DEFAULT_NORM_EPS};
use crate::error::{Error, Result};
use crate::eval::Normalization;
use crate::loss::{ClampPolicy, LossKind, DEFAULT_FLOOR};
use crate::model::{HeadKind, DEFAULT_INIT_JITTER, DEFAULT_MA_WINDOW};
use crate::targetdist::{Family, TargetDistSpec};
use crate::train::{TargetScaling, TrainConfig};

/// Overrides the default output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "ORDINAL_TS_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Label used in outputs.
    pub dataset: String,
    /// CSV file; the synthetic fixture is used when absent.
    pub path: Option<PathBuf>,
    pub date_column: Option<String>,
    /// Feature columns to keep; all numeric columns when empty.
    pub features: Vec<String>,
    pub split: SplitRatios,
    pub stride: usize,
    pub range_mode: RangeMode,
    pub norm_epsilon: f64,
    pub target_scaling: TargetScaling,
    /// Cap on evaluated test windows, 0 for all.
    pub max_test_windows: usize,
    pub fixture: FixtureSpec,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            dataset: "sine_fixture".into(),
            path: None,
            date_column: None,
            features: Vec::new(),
            split: SplitRatios::default(),
            stride: 1,
            range_mode: RangeMode::ZeroOne,
            norm_epsilon: DEFAULT_NORM_EPS,
            target_scaling: TargetScaling::Lookback,
            max_test_windows: 0,
            fixture: FixtureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TptSection {
    pub family: Family,
    pub sigma: f64,
    pub nu: f64,
    pub bins: usize,
}

impl Default for TptSection {
    fn default() -> Self {
        Self {
            family: Family::TruncatedGaussian,
            sigma: 0.01,
            nu: 5.0,
            bins: 100,
        }
    }
}

impl TptSection {
    pub fn spec(&self) -> Result<TargetDistSpec> {
        let s = TargetDistSpec {
            family: self.family,
            sigma: self.sigma,
            nu: self.nu,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub ma_window: usize,
    pub head: HeadKind,
    pub init_jitter: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            ma_window: DEFAULT_MA_WINDOW,
            head: HeadKind::Shared,
            init_jitter: DEFAULT_INIT_JITTER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    /// 0 disables early stopping.
    pub patience: usize,
    pub lr_decay: f64,
    pub shuffle: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            batch_size: d.batch_size,
            epochs: d.epochs,
            lr: d.lr,
            patience: d.patience.unwrap_or(0),
            lr_decay: d.lr_decay,
            shuffle: d.shuffle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub kind: LossKind,
    pub floor: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            kind: LossKind::Oce,
            floor: DEFAULT_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub normalization: Normalization,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            normalization: Normalization::PerElement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub enabled: bool,
    pub snr_db: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            enabled: false,
            snr_db: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lookbacks: Vec<usize>,
    pub horizons: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub bins: Vec<usize>,
    pub families: Vec<Family>,
    pub snrs: Vec<f64>,
    pub losses: Vec<LossKind>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lookbacks: vec![96],
            horizons: vec![24],
            sigmas: vec![0.001, 0.01, 0.1, 1.0],
            bins: vec![30, 45, 75, 100],
            families: vec![Family::TruncatedGaussian, Family::StudentT, Family::Laplace],
            snrs: vec![-3.0, 0.0, 3.0, 10.0, 20.0],
            losses: vec![LossKind::Ce, LossKind::Oce],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfluenceSection {
    pub instances: usize,
    pub max_d: usize,
    pub max_k: usize,
    /// Diagonal loading of the sampled softmax covariance.
    pub p_ridge: f64,
    pub kappas: Vec<f64>,
    pub lambda_mins: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl Default for InfluenceSection {
    fn default() -> Self {
        Self {
            instances: 1000,
            max_d: 5,
            max_k: 5,
            p_ridge: crate::influence::DEFAULT_P_RIDGE,
            kappas: vec![1.0, 2.0, 5.0, 10.0, 100.0],
            lambda_mins: vec![0.01, 0.1, 0.5, 1.0],
            residuals: vec![0.1, 1.0, 10.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Omit wall-clock timestamps so reruns produce identical files.
    pub deterministic: bool,
    pub data: DataSection,
    pub tpt: TptSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub loss: LossSection,
    pub eval: EvalSection,
    pub noise: NoiseSection,
    pub sweep: SweepSection,
    pub influence: InfluenceSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            deterministic: false,
            data: DataSection::default(),
            tpt: TptSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            loss: LossSection::default(),
            eval: EvalSection::default(),
            noise: NoiseSection::default(),
            sweep: SweepSection::default(),
            influence: InfluenceSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies `key=value` overrides; the value is read as a TOML literal
    /// and falls back to a bare string.
    pub fn apply_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut tree = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            let value = parse_literal(raw.trim());
            set_path(&mut tree, key.trim(), value)?;
        }
        tree.try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.train.batch_size,
            epochs: self.train.epochs,
            lr: self.train.lr,
            patience: (self.train.patience > 0).then_some(self.train.patience),
            lr_decay: self.train.lr_decay,
            seed: self.seed,
            shuffle: self.train.shuffle,
            loss: self.loss.kind,
            clamp: ClampPolicy {
                floor: self.loss.floor,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.data.path {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "data.path {} does not exist",
                    p.display()
                )));
            }
        }
        let s = &self.sweep;
        let empties = [
            ("lookbacks", s.lookbacks.is_empty()),
            ("horizons", s.horizons.is_empty()),
            ("sigmas", s.sigmas.is_empty()),
            ("bins", s.bins.is_empty()),
            ("families", s.families.is_empty()),
            ("snrs", s.snrs.is_empty()),
            ("losses", s.losses.is_empty()),
        ];
        if let Some((name, _)) = empties.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("sweep.{name} is empty")));
        }
        if s.horizons.contains(&0) || s.lookbacks.contains(&0) {
            return Err(Error::Config("lookbacks and horizons must be ≥ 1".into()));
        }
        if self.data.stride == 0 {
            return Err(Error::Config("data.stride must be ≥ 1".into()));
        }
        self.data.split.validate()?;
        self.tpt.spec()?;
        if self.tpt.bins < 2 {
            return Err(Error::Config("tpt.bins must be ≥ 2".into()));
        }
        self.train_config().validate()?;
        Ok(())
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Wrap {
        v: toml::Value,
    }
    match toml::from_str::<Wrap>(&format!("v = {raw}")) {
        Ok(w) => w.v,
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(tree: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Config(format!("empty override key `{key}`")))?;
    let mut node = tree;
    for p in parts {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
