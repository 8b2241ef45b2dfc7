//! Experiment pipeline behind the CLI: data → encoding → training →
//! reconstruction → metrics, plus sweeps, influence reports and rank tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::data::{
    denormalize, generate_fixture, inject_noise, load_csv, make_windows, signal_power, split,
    CsvSchema, NoiseSpec, SeriesTable, TimeWindow,
};
use crate::error::{Error, Result};
use crate::eval::{
    metrics, nemenyi_cd, persistence_forecast, rank_table, read_scores_csv, reconstruct_grid,
    MetricAccumulator, MetricPair, MetricsDoc, Normalization, SignificanceConfig,
};
use crate::influence::{influence_bounds, random_instance, stability_region};
use crate::model::{forward, init_params, save_checkpoint, ModelShape};
use crate::numerics::{Rng, Stream};
use crate::targetdist::{make_bins, Family};
use crate::train::{fit, prepare_sample, ScalingConfig, TrainReport};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Snapshot sufficient to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub seeds: SeedInfo,
    /// Seconds since the Unix epoch; absent in deterministic mode.
    pub started_at: Option<u64>,
    pub finished_at: Option<u64>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub global: u64,
    pub init_stream: u64,
    pub shuffle_stream: u64,
    pub noise_stream: u64,
    pub influence_stream: u64,
}

impl SeedInfo {
    fn new(seed: u64) -> Self {
        Self {
            global: seed,
            init_stream: Stream::Init as u64,
            shuffle_stream: Stream::Shuffle as u64,
            noise_stream: Stream::Noise as u64,
            influence_stream: Stream::Influence as u64,
        }
    }
}

fn now(cfg: &ExperimentConfig) -> Option<u64> {
    if cfg.deterministic {
        None
    } else {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs())
    }
}

fn manifest(
    cfg: &ExperimentConfig,
    command: &str,
    started_at: Option<u64>,
    outputs: Vec<PathBuf>,
) -> RunManifest {
    RunManifest {
        command: command.into(),
        code_version: CODE_VERSION.into(),
        config: cfg.clone(),
        seeds: SeedInfo::new(cfg.seed),
        started_at,
        finished_at: now(cfg),
        outputs,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Invariant(format!("serializing {}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Invariant(format!("{}: {other:?}", path.display())),
    }
}

/// The configured CSV file or, without one, the synthetic fixture.
pub fn load_series(cfg: &ExperimentConfig) -> Result<SeriesTable> {
    match &cfg.data.path {
        Some(p) => load_csv(
            p,
            &CsvSchema {
                date_column: cfg.data.date_column.clone(),
                features: (!cfg.data.features.is_empty()).then(|| cfg.data.features.clone()),
            },
        ),
        None => generate_fixture(&cfg.data.fixture),
    }
}

/// Per-feature `10·log₁₀(P_signal / P_noise)` of the difference between two tables.
pub fn realized_snr_db(clean: &SeriesTable, noisy: &SeriesTable) -> Result<Vec<f64>> {
    let noise = noisy.values.sub(&clean.values)?;
    Ok(signal_power(&clean.values)
        .iter()
        .zip(signal_power(&noise))
        .map(|(s, n)| 10.0 * (s / n).log10())
        .collect())
}

/// Everything produced by one (lookback, horizon) training run.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub run_id: String,
    pub metrics: MetricsDoc,
    pub per_horizon: MetricPair,
    pub persistence: MetricPair,
    pub report: TrainReport,
    pub realized_snr_db: Option<Vec<f64>>,
    pub test_windows: usize,
}

pub fn run_id(cfg: &ExperimentConfig, w: usize, h: usize) -> String {
    let snr = if cfg.noise.enabled {
        format!("snr{}", cfg.noise.snr_db)
    } else {
        "clean".into()
    };
    let raw = format!(
        "{}-w{w}-h{h}-{}-{}-k{}-s{}-{snr}-seed{}",
        cfg.data.dataset, cfg.loss.kind, cfg.tpt.family, cfg.tpt.bins, cfg.tpt.sigma, cfg.seed
    );
    raw.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

struct Prediction {
    window: usize,
    y_true: crate::numerics::Matrix,
    y_pred: crate::numerics::Matrix,
}

/// Runs one training/evaluation cell. Writes the run directory when
/// `run_dir` is given.
pub fn run_cell(
    cfg: &ExperimentConfig,
    w: usize,
    h: usize,
    run_dir: Option<&Path>,
) -> Result<CellResult> {
    let clean = load_series(cfg)?;
    let (table, realized) = if cfg.noise.enabled {
        let spec = NoiseSpec {
            snr_db: cfg.noise.snr_db,
            seed: cfg.seed,
            enabled: true,
        };
        let mut rng = Rng::substream(cfg.seed, Stream::Noise);
        let noisy = inject_noise(&clean, &spec, &mut rng);
        let snr = realized_snr_db(&clean, &noisy)?;
        (noisy, Some(snr))
    } else {
        (clean, None)
    };

    let (train_t, val_t, test_t) = split(&table, &cfg.data.split)?;
    let stride = cfg.data.stride;
    let train_w = make_windows(&train_t, w, h, stride)?;
    let val_w = if val_t.len() >= w + h {
        make_windows(&val_t, w, h, stride)?
    } else {
        Vec::new()
    };
    let mut test_w = make_windows(&test_t, w, h, stride)?;
    if cfg.data.max_test_windows > 0 {
        test_w.truncate(cfg.data.max_test_windows);
    }

    let (a, b) = cfg.data.range_mode.support();
    let bins = make_bins(cfg.tpt.bins, a, b)?;
    let tpt = cfg.tpt.spec()?;
    let scaling = ScalingConfig {
        range_mode: cfg.data.range_mode,
        epsilon: cfg.data.norm_epsilon,
        target: cfg.data.target_scaling,
    };
    let prep = |ws: &[TimeWindow]| -> Result<Vec<_>> {
        ws.iter()
            .map(|win| prepare_sample(win, &scaling, None, &bins, &tpt))
            .collect()
    };
    let train_s = prep(&train_w)?;
    let val_s = prep(&val_w)?;

    if cfg.model.ma_window > w {
        return Err(Error::Config(format!(
            "model.ma_window {} exceeds lookback {w}",
            cfg.model.ma_window
        )));
    }
    let shape = ModelShape {
        w,
        h,
        m: table.n_features(),
        k: cfg.tpt.bins,
        ma_window: cfg.model.ma_window,
        head: cfg.model.head,
    };
    let mut init_rng = Rng::substream(cfg.seed, Stream::Init);
    let params = init_params(shape, &mut init_rng, cfg.model.init_jitter)?;
    let (params, report) = fit(params, &train_s, &val_s, &cfg.train_config())?;

    let mut acc = MetricAccumulator::default();
    let mut base = MetricAccumulator::default();
    let mut preds = Vec::with_capacity(test_w.len());
    for (i, win) in test_w.iter().enumerate() {
        let sample = prepare_sample(win, &scaling, None, &bins, &tpt)?;
        let f = forward(&params, &sample.x_norm)?;
        let y_pred = denormalize(&reconstruct_grid(&f.probs, &bins)?, &sample.stats)?;
        acc.push(&win.horizon, &y_pred)?;
        base.push(&win.horizon, &persistence_forecast(&win.lookback, h)?)?;
        preds.push(Prediction {
            window: i,
            y_true: win.horizon.clone(),
            y_pred,
        });
    }
    let norm = cfg.eval.normalization;
    let headline = acc.finish(norm)?;
    let per_horizon = acc.finish(Normalization::PerHorizon)?;
    let persistence = base.finish(norm)?;
    let run_id = run_id(cfg, w, h);
    let doc = MetricsDoc {
        dataset: cfg.data.dataset.clone(),
        horizon: h,
        lookback: w,
        loss: cfg.loss.kind.to_string(),
        tpt: format!(
            "{}(sigma={}, bins={})",
            cfg.tpt.family, cfg.tpt.sigma, cfg.tpt.bins
        ),
        seed: cfg.seed,
        mse: headline.mse,
        mae: headline.mae,
        normalization: norm,
    };

    if let Some(dir) = run_dir {
        create_dir(dir)?;
        let started = now(cfg);
        let mut cell_cfg = cfg.clone();
        cell_cfg.sweep.lookbacks = vec![w];
        cell_cfg.sweep.horizons = vec![h];

        write_json(&dir.join("metrics.json"), &doc)?;

        let pred_path = dir.join("predictions.csv");
        let mut wr = csv_writer(&pred_path)?;
        wr.write_record(["window_id", "step", "channel", "y_true", "y_pred"])
            .map_err(|e| csv_err(&pred_path, e))?;
        for p in &preds {
            for j in 0..h {
                for c in 0..shape.m {
                    wr.write_record([
                        p.window.to_string(),
                        j.to_string(),
                        c.to_string(),
                        p.y_true[(j, c)].to_string(),
                        p.y_pred[(j, c)].to_string(),
                    ])
                    .map_err(|e| csv_err(&pred_path, e))?;
                }
            }
        }
        wr.flush().map_err(|e| Error::io(&pred_path, e))?;

        let wm_path = dir.join("window_metrics.csv");
        let mut wr = csv_writer(&wm_path)?;
        wr.write_record(["window_id", "mse", "mae"])
            .map_err(|e| csv_err(&wm_path, e))?;
        for p in &preds {
            let m = metrics(&p.y_true, &p.y_pred, norm)?;
            wr.write_record([p.window.to_string(), m.mse.to_string(), m.mae.to_string()])
                .map_err(|e| csv_err(&wm_path, e))?;
        }
        wr.flush().map_err(|e| Error::io(&wm_path, e))?;

        let log_path = dir.join("train.log");
        fs::write(&log_path, report.log_lines()).map_err(|e| Error::io(&log_path, e))?;
        write_json(&dir.join("train_report.json"), &report)?;
        save_checkpoint(&params, dir.join("checkpoint.json"))?;

        let outputs = [
            "metrics.json",
            "predictions.csv",
            "window_metrics.csv",
            "train.log",
            "train_report.json",
            "checkpoint.json",
        ]
        .iter()
        .map(PathBuf::from)
        .collect();
        write_json(
            &dir.join("manifest.json"),
            &manifest(&cell_cfg, "train", started, outputs),
        )?;
    }

    Ok(CellResult {
        run_id,
        metrics: doc,
        per_horizon,
        persistence,
        report,
        realized_snr_db: realized,
        test_windows: test_w.len(),
    })
}

/// One row of a sweep summary. Failed cells keep their row with the error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub run_id: String,
    pub dataset: String,
    pub lookback: usize,
    pub horizon: usize,
    pub loss: String,
    pub family: String,
    pub bins: usize,
    pub sigma: f64,
    pub snr_db: Option<f64>,
    pub status: String,
    pub mse: Option<f64>,
    pub mae: Option<f64>,
    pub mse_per_horizon: Option<f64>,
    pub mae_per_horizon: Option<f64>,
    pub persistence_mse: Option<f64>,
    pub val_objective_initial: Option<f64>,
    pub val_objective_best: Option<f64>,
    pub best_epoch: Option<usize>,
    /// Per-feature realized SNR, `;`-separated.
    pub realized_snr_db: Option<String>,
}

fn sweep_row(
    cfg: &ExperimentConfig,
    axis: &str,
    value: String,
    w: usize,
    h: usize,
    out: &Result<CellResult>,
) -> SweepRow {
    let mut row = SweepRow {
        axis: axis.into(),
        value,
        run_id: run_id(cfg, w, h),
        dataset: cfg.data.dataset.clone(),
        lookback: w,
        horizon: h,
        loss: cfg.loss.kind.to_string(),
        family: cfg.tpt.family.to_string(),
        bins: cfg.tpt.bins,
        sigma: cfg.tpt.sigma,
        snr_db: cfg.noise.enabled.then_some(cfg.noise.snr_db),
        status: "ok".into(),
        mse: None,
        mae: None,
        mse_per_horizon: None,
        mae_per_horizon: None,
        persistence_mse: None,
        val_objective_initial: None,
        val_objective_best: None,
        best_epoch: None,
        realized_snr_db: None,
    };
    match out {
        Ok(r) => {
            row.mse = Some(r.metrics.mse);
            row.mae = Some(r.metrics.mae);
            row.mse_per_horizon = Some(r.per_horizon.mse);
            row.mae_per_horizon = Some(r.per_horizon.mae);
            row.persistence_mse = Some(r.persistence.mse);
            row.val_objective_initial = r.report.initial_val_loss;
            row.val_objective_best = r.report.best_val_loss;
            row.best_epoch = Some(r.report.best_epoch);
            row.realized_snr_db = r.realized_snr_db.as_ref().map(|v| {
                v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            });
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

fn write_rows(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut wr = csv_writer(path)?;
    for r in rows {
        wr.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    wr.flush().map_err(|e| Error::io(path, e))
}

/// Result of a sweep command.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub manifest: RunManifest,
    pub rows: Vec<SweepRow>,
    pub summary_path: PathBuf,
    /// Exit code of the first failed cell.
    pub first_error_code: Option<i32>,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status != "ok").count()
    }
}

fn run_cells(
    cfg: &ExperimentConfig,
    command: &str,
    axis: &str,
    cells: Vec<(String, ExperimentConfig, usize, usize)>,
    summary_name: &str,
) -> Result<SweepOutcome> {
    cfg.validate()?;
    let started = now(cfg);
    create_dir(&cfg.out_dir)?;
    let mut rows = Vec::with_capacity(cells.len());
    let mut outputs = Vec::new();
    let mut first_error_code = None;
    for (value, cell_cfg, w, h) in cells {
        let id = run_id(&cell_cfg, w, h);
        let dir = cfg.out_dir.join(&id);
        let out = cell_cfg
            .validate()
            .and_then(|_| run_cell(&cell_cfg, w, h, Some(&dir)));
        if let Err(e) = &out {
            first_error_code.get_or_insert(e.exit_code());
        }
        rows.push(sweep_row(&cell_cfg, axis, value, w, h, &out));
        outputs.push(PathBuf::from(id));
    }
    let summary_path = cfg.out_dir.join(summary_name);
    write_rows(&summary_path, &rows)?;
    outputs.push(PathBuf::from(summary_name));
    let m = manifest(cfg, command, started, outputs);
    write_json(&cfg.out_dir.join("manifest.json"), &m)?;
    Ok(SweepOutcome {
        manifest: m,
        rows,
        summary_path,
        first_error_code,
    })
}

/// Trains every (lookback, horizon) pair in the sweep lists.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let mut cells = Vec::new();
    for &w in &cfg.sweep.lookbacks {
        for &h in &cfg.sweep.horizons {
            cells.push((format!("w{w}"), cfg.clone(), w, h));
        }
    }
    run_cells(cfg, "train", "lookback", cells, "results.csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Family,
    Bins,
    Sigma,
    Lookback,
    Snr,
    Loss,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "family" => Axis::Family,
            "bins" => Axis::Bins,
            "sigma" => Axis::Sigma,
            "lookback" => Axis::Lookback,
            "snr" => Axis::Snr,
            "loss" => Axis::Loss,
            other => return Err(Error::Config(format!("unknown ablation axis `{other}`"))),
        })
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Family => "family",
            Axis::Bins => "bins",
            Axis::Sigma => "sigma",
            Axis::Lookback => "lookback",
            Axis::Snr => "snr",
            Axis::Loss => "loss",
        })
    }
}

/// Varies one axis over its sweep list, holding everything else at the
/// baseline (first lookback), for every horizon.
pub fn cmd_ablate(cfg: &ExperimentConfig, axis: Axis) -> Result<SweepOutcome> {
    let base_w = cfg.sweep.lookbacks[0];
    let s = &cfg.sweep;
    let variants: Vec<(String, ExperimentConfig, usize)> = match axis {
        Axis::Family => s
            .families
            .iter()
            .map(|&f: &Family| {
                let mut c = cfg.clone();
                c.tpt.family = f;
                (f.to_string(), c, base_w)
            })
            .collect(),
        Axis::Bins => s
            .bins
            .iter()
            .map(|&k| {
                let mut c = cfg.clone();
                c.tpt.bins = k;
                (k.to_string(), c, base_w)
            })
            .collect(),
        Axis::Sigma => s
            .sigmas
            .iter()
            .map(|&v| {
                let mut c = cfg.clone();
                c.tpt.sigma = v;
                (v.to_string(), c, base_w)
            })
            .collect(),
        Axis::Lookback => s
            .lookbacks
            .iter()
            .map(|&w| (w.to_string(), cfg.clone(), w))
            .collect(),
        Axis::Snr => s
            .snrs
            .iter()
            .map(|&v| {
                let mut c = cfg.clone();
                c.noise.enabled = true;
                c.noise.snr_db = v;
                (v.to_string(), c, base_w)
            })
            .collect(),
        Axis::Loss => s
            .losses
            .iter()
            .map(|&l| {
                let mut c = cfg.clone();
                c.loss.kind = l;
                (l.to_string(), c, base_w)
            })
            .collect(),
    };
    let mut cells = Vec::new();
    for (value, c, w) in variants {
        for &h in &cfg.sweep.horizons {
            cells.push((value.clone(), c.clone(), w, h));
        }
    }
    run_cells(
        cfg,
        &format!("ablate {axis}"),
        &axis.to_string(),
        cells,
        &format!("ablation_{axis}.csv"),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceRow {
    pub instance: usize,
    pub d: usize,
    pub k: usize,
    pub status: String,
    pub ratio: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub kappa2: Option<f64>,
    pub lambda_min_p: Option<f64>,
    pub lambda_max_p: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct InfluenceOutcome {
    pub manifest: RunManifest,
    pub rows: Vec<InfluenceRow>,
    pub skipped: usize,
    pub violations: usize,
}

/// Randomized ratio-bound verification plus the stability grid. A bound
/// violation dumps the offending instance and returns `Invariant`.
pub fn cmd_influence(cfg: &ExperimentConfig) -> Result<InfluenceOutcome> {
    let ic = &cfg.influence;
    if ic.max_d == 0 || ic.max_k < 2 {
        return Err(Error::Config(
            "influence.max_d ≥ 1 and influence.max_k ≥ 2 required".into(),
        ));
    }
    let started = now(cfg);
    create_dir(&cfg.out_dir)?;
    let mut rows = Vec::with_capacity(ic.instances);
    let (mut skipped, mut violations) = (0, 0);
    let mut dump = None;
    for i in 0..ic.instances {
        let stream = ((Stream::Influence as u64) << 32) | i as u64;
        let mut rng = Rng::with_stream_id(cfg.seed, stream);
        let d = 1 + rng.index(ic.max_d);
        let k = 2 + rng.index(ic.max_k - 1);
        let case = random_instance(&mut rng, d, k, ic.p_ridge)?;
        let mut row = InfluenceRow {
            instance: i,
            d,
            k,
            status: "ok".into(),
            ratio: None,
            lower_bound: None,
            upper_bound: None,
            kappa2: None,
            lambda_min_p: None,
            lambda_max_p: None,
            residual: None,
        };
        match influence_bounds(&case.reg, &case.cls, &case.p_expected) {
            Ok(r) => {
                row.ratio = Some(r.ratio);
                row.lower_bound = Some(r.lower_bound);
                row.upper_bound = Some(r.upper_bound);
                row.kappa2 = Some(r.kappa2);
                row.lambda_min_p = Some(r.lambda_min_p);
                row.lambda_max_p = Some(r.lambda_max_p);
                row.residual = Some(r.residual);
            }
            Err(Error::Precondition(msg)) => {
                skipped += 1;
                row.status = format!("skipped: {msg}");
            }
            Err(Error::Invariant(msg)) => {
                violations += 1;
                row.status = format!("violation: {msg}");
                dump.get_or_insert_with(|| {
                    serde_json::json!({
                        "instance": i,
                        "x": case.reg.x,
                        "y": case.reg.y,
                        "theta": case.reg.theta,
                        "sigma_x": case.reg.sigma_x.data(),
                        "label": case.cls.y,
                        "beta": case.cls.beta.data(),
                        "p_expected": case.p_expected.data(),
                        "message": msg,
                    })
                });
            }
            Err(e) => return Err(e),
        }
        rows.push(row);
    }

    let inf_path = cfg.out_dir.join("influence.csv");
    let mut wr = csv_writer(&inf_path)?;
    for r in &rows {
        wr.serialize(r).map_err(|e| csv_err(&inf_path, e))?;
    }
    wr.flush().map_err(|e| Error::io(&inf_path, e))?;

    let grid = stability_region(&ic.kappas, &ic.lambda_mins, &ic.residuals)?;
    let st_path = cfg.out_dir.join("stability.csv");
    let mut wr = csv_writer(&st_path)?;
    for cell in &grid {
        wr.serialize(cell).map_err(|e| csv_err(&st_path, e))?;
    }
    wr.flush().map_err(|e| Error::io(&st_path, e))?;

    let mut outputs = vec![
        PathBuf::from("influence.csv"),
        PathBuf::from("stability.csv"),
    ];
    if let Some(d) = &dump {
        write_json(&cfg.out_dir.join("violation.json"), d)?;
        outputs.push(PathBuf::from("violation.json"));
    }
    let m = manifest(cfg, "influence", started, outputs);
    write_json(&cfg.out_dir.join("manifest.json"), &m)?;
    if violations > 0 {
        return Err(Error::Invariant(format!(
            "{violations} of {} instances violate the ratio bound; first dumped to violation.json",
            ic.instances
        )));
    }
    Ok(InfluenceOutcome {
        manifest: m,
        rows,
        skipped,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdOutcome {
    pub cd: f64,
    pub algorithms: Vec<String>,
    pub ranks: Vec<f64>,
}

/// Critical distance and average ranks for a score CSV; ranks go to `ranks_out`.
pub fn cmd_cd(
    scores: &Path,
    q_alpha: f64,
    lower_is_better: bool,
    ranks_out: &Path,
) -> Result<CdOutcome> {
    let table = read_scores_csv(scores)?;
    let (k, n) = table.scores.shape();
    let cd = nemenyi_cd(&SignificanceConfig {
        k_algorithms: k,
        n_datasets: n,
        q_alpha,
    })?;
    let ranks = rank_table(&table.scores, lower_is_better)?;
    if let Some(parent) = ranks_out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut wr = csv_writer(ranks_out)?;
    wr.write_record(["algorithm", "average_rank"])
        .map_err(|e| csv_err(ranks_out, e))?;
    for (a, r) in table.algorithms.iter().zip(&ranks) {
        wr.write_record([a.clone(), r.to_string()])
            .map_err(|e| csv_err(ranks_out, e))?;
    }
    wr.flush().map_err(|e| Error::io(ranks_out, e))?;
    Ok(CdOutcome {
        cd,
        algorithms: table.algorithms,
        ranks,
    })
}

/// Writes the configured synthetic fixture as CSV.
pub fn cmd_gen_fixture(cfg: &ExperimentConfig, path: &Path) -> Result<SeriesTable> {
    let table = generate_fixture(&cfg.data.fixture)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    crate::data::write_csv(&table, path)?;
    Ok(table)
}
