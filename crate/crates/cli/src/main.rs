//! Command-line front end: align raw CSVs into a frame file, run
//! experiments in their three modes, and render stored run reports.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rollcast_core::config::ExperimentConfig;
use rollcast_core::daa::CapMode;
use rollcast_core::ingest::{self, CurveKind};
use rollcast_core::report::ReportFormat;
use rollcast_core::runner::{render_run_report, run_experiment, RunMode};
use rollcast_core::strategy::KStar;
use rollcast_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "rollcast",
    version,
    about = "Walk-forward forecast selection and portfolio evaluation over daily CSV data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align daily price and curve CSVs onto one shared trading calendar.
    Ingest {
        /// Price CSVs (`date,close`); the asset takes the file's stem name.
        #[arg(long = "prices", num_args = 1.., required = true)]
        prices: Vec<PathBuf>,
        /// Curve CSVs as `<kind>=<path>` with kind `vix` or `yield`
        /// (`date,m<1>,m<3>,...` with tenors in months). Repeatable.
        #[arg(long = "curve", value_name = "KIND=PATH")]
        curves: Vec<String>,
        /// Where to write the aligned frame CSV.
        #[arg(long)]
        out: PathBuf,
        /// Carry the last curve row forward over dates where only the curve
        /// file has a gap.
        #[arg(long)]
        forward_fill: bool,
    },
    /// Run the walk-forward experiment with validation-selected
    /// hyperparameters.
    Backtest {
        #[arg(long)]
        config: PathBuf,
        /// Restrict the run to one selection method.
        #[arg(long, value_parser = ["dms", "ae", "fixed"])]
        method: Option<String>,
        /// Also write per-candidate loss dumps for the chosen
        /// configurations.
        #[arg(long)]
        loss_debug: bool,
    },
    /// Reallocate across the whole strategy grid quarterly by trailing
    /// Sharpe ratio.
    Daa {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = ["capped", "uncapped"])]
        cap: String,
    },
    /// Run the volatility-hedged cross-asset strategy for one asset.
    Cas {
        #[arg(long)]
        config: PathBuf,
        /// Total signal slots per horizon: three or six times the horizon.
        #[arg(long, value_parser = ["3k", "6k"])]
        kstar: String,
        #[arg(long)]
        asset: String,
    },
    /// Render the metrics of a finished run from its manifest.
    Report {
        /// Path to a run's `manifest.json`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_parser = ["csv", "json"], default_value = "csv")]
        format: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            prices,
            curves,
            out,
            forward_fill,
        } => cmd_ingest(&prices, &curves, &out, forward_fill),
        Command::Backtest {
            config,
            method,
            loss_debug,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let mode = RunMode::Backtest {
                method_filter: method,
                loss_debug,
            };
            announce(run_experiment(&cfg, &mode)?, &cfg)
        }
        Command::Daa { config, cap } => {
            let cfg = ExperimentConfig::load(&config)?;
            let cap = CapMode::parse(&cap)?;
            announce(run_experiment(&cfg, &RunMode::Daa { cap })?, &cfg)
        }
        Command::Cas {
            config,
            kstar,
            asset,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let kstar = KStar::parse(&kstar)?;
            announce(run_experiment(&cfg, &RunMode::Cas { kstar, asset })?, &cfg)
        }
        Command::Report { run, format } => {
            let format = ReportFormat::parse(&format)?;
            print!("{}", render_run_report(&run, format)?);
            Ok(())
        }
    }
}

fn cmd_ingest(
    prices: &[PathBuf],
    curves: &[String],
    out: &std::path::Path,
    forward_fill: bool,
) -> Result<()> {
    let mut price_series = Vec::with_capacity(prices.len());
    for path in prices {
        let asset = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| {
                Error::config(format!(
                    "cannot derive an asset name from {}",
                    path.display()
                ))
            })?
            .to_string();
        price_series.push(ingest::load_price_csv(path, &asset)?);
    }
    let mut curve_tables = Vec::with_capacity(curves.len());
    for spec in curves {
        let (kind, path) = spec.split_once('=').ok_or_else(|| {
            Error::config(format!(
                "curve argument {spec:?} must look like vix=path/to.csv"
            ))
        })?;
        let kind = CurveKind::parse(kind)
            .ok_or_else(|| Error::config(format!("unknown curve kind {kind:?}")))?;
        curve_tables.push(ingest::load_curve_csv(path, kind)?);
    }
    let frame = ingest::align_inner(&price_series, &curve_tables, forward_fill)?;
    ingest::write_frame_csv(&frame, out)?;
    println!(
        "aligned {} columns over {} trading days ({}..{}) -> {}",
        frame.names().len(),
        frame.len(),
        frame.calendar().date(0),
        frame.calendar().date(frame.len() - 1),
        out.display()
    );
    Ok(())
}

fn announce(manifest: rollcast_core::runner::RunManifest, cfg: &ExperimentConfig) -> Result<()> {
    println!(
        "{}: wrote {} files to {} (manifest.json alongside)",
        manifest.mode,
        manifest.outputs.len(),
        cfg.output.display()
    );
    Ok(())
}
