use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ordinal_ts::config::{ExperimentConfig, OUT_DIR_ENV};
use ordinal_ts::experiment::{
    cmd_ablate, cmd_cd, cmd_gen_fixture, cmd_influence, cmd_train, Axis, SweepOutcome,
};
use ordinal_ts::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ordinal-ts",
    version,
    about = "Ordinal cross-entropy time series forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set train.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (defaults to $ORDINAL_TS_OUT, then `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global seed; every random stream derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Omit timestamps so reruns produce identical files.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate every (lookback, horizon) pair.
    Train(Common),
    /// Sweep one axis, holding the rest at baseline.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// family, bins, sigma, lookback, snr or loss
        #[arg(long)]
        axis: Axis,
    },
    /// Randomized influence-ratio verification and stability grid.
    Influence(Common),
    /// Nemenyi critical distance and average ranks.
    Cd {
        /// CSV with one column per algorithm and one row per dataset.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        q_alpha: f64,
        /// Rank larger scores first.
        #[arg(long)]
        higher_is_better: bool,
        /// Where to write the average ranks.
        #[arg(long, default_value = "ranks.csv")]
        ranks_out: PathBuf,
    },
    /// Write the synthetic sinusoid fixture as CSV.
    GenFixture {
        #[command(flatten)]
        common: Common,
        /// Destination CSV file.
        #[arg(long)]
        output: PathBuf,
    },
}

fn resolve(c: &Common) -> Result<ExperimentConfig> {
    let base = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut cfg = base.apply_overrides(&c.overrides)?;
    if let Some(out) = c
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
    {
        cfg.out_dir = out;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    cfg.deterministic |= c.deterministic;
    cfg.validate()?;
    Ok(cfg)
}

fn report_sweep(out: &SweepOutcome) -> Result<()> {
    for r in &out.rows {
        match (r.mse, r.mae) {
            (Some(mse), Some(mae)) => println!(
                "{}\tw={}\th={}\t{}={}\tmse={mse:.6}\tmae={mae:.6}",
                r.run_id, r.lookback, r.horizon, r.axis, r.value
            ),
            _ => eprintln!("{}\t{}", r.run_id, r.status),
        }
    }
    println!("summary: {}", out.summary_path.display());
    let failed = out.failures();
    if failed == out.rows.len() {
        let code = out.first_error_code.unwrap_or(3);
        return Err(match code {
            1 => Error::Config("every run failed".into()),
            2 => Error::InsufficientData("every run failed".into()),
            4 => Error::Invariant("every run failed".into()),
            _ => Error::Precondition("every run failed".into()),
        });
    }
    if failed > 0 {
        eprintln!("warning: {failed} of {} runs failed", out.rows.len());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => report_sweep(&cmd_train(&resolve(&c)?)?),
        Command::Ablate { common, axis } => report_sweep(&cmd_ablate(&resolve(&common)?, axis)?),
        Command::Influence(c) => {
            let cfg = resolve(&c)?;
            let out = cmd_influence(&cfg)?;
            println!(
                "instances={} skipped={} violations={} out={}",
                out.rows.len(),
                out.skipped,
                out.violations,
                cfg.out_dir.display()
            );
            Ok(())
        }
        Command::Cd {
            scores,
            q_alpha,
            higher_is_better,
            ranks_out,
        } => {
            let out = cmd_cd(&scores, q_alpha, !higher_is_better, &ranks_out)?;
            println!("cd={}", out.cd);
            for (a, r) in out.algorithms.iter().zip(&out.ranks) {
                println!("{a}\t{r}");
            }
            Ok(())
        }
        Command::GenFixture { common, output } => {
            let cfg = resolve(&common)?;
            let t = cmd_gen_fixture(&cfg, &output)?;
            println!(
                "wrote {} rows x {} features to {}",
                t.len(),
                t.n_features(),
                output.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
