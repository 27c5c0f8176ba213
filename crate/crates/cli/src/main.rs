use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sevi_cli::{Manifest, PipelineConfig, Runner, StageError};
use sevi_core::brandsem::{evaluate, read_labels};
use sevi_core::Error;

#[derive(Parser)]
#[command(name = "sevi", version, about = "Street economic vitality diagnostics")]
struct Cli {
    /// Root directory; all configured paths are relative to it.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    /// Configuration file, relative to the workdir.
    #[arg(long, global = true, default_value = "sevi.toml")]
    config: PathBuf,
    /// Override a configuration key, e.g. `--set spillover.threshold_m=3000`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the input tables.
    Ingest,
    /// Calibrate decay bandwidths and compute the spillover field.
    Spillover,
    /// Compute the nine segment indicators.
    Indicators,
    /// Normalize, weight and aggregate into SEVI and its alternatives.
    Sevi,
    /// Correlation, PCA and the brand-ratio external validation.
    Stats,
    /// Time-sliced GWR over the eight tidal periods.
    Gwr,
    /// Threshold, decay and kernel sweeps plus index agreement.
    Robustness,
    /// Write the plain-text report (runs every analysis stage).
    Report,
    /// Run every stage and write the manifest.
    Run {
        /// Compare the new manifest against this one; differences fail the run.
        #[arg(long)]
        golden: Option<PathBuf>,
    },
    /// Brand decoding and evaluation.
    Brands {
        #[command(subcommand)]
        command: BrandsCommand,
    },
}

#[derive(Subcommand)]
enum BrandsCommand {
    /// Decode the configured image corpus.
    Decode,
    /// Score decoded brands against ground-truth labels.
    Eval {
        /// Decoded brands CSV (default: brands_decoded.csv in the output dir).
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Ground-truth CSV (default: brands.ground_truth from the config).
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
}

fn fail(stage: &'static str, source: Error) -> StageError {
    StageError { stage, source }
}

fn brands_eval(
    cli: &Cli,
    config: PipelineConfig,
    predictions: &Option<PathBuf>,
    ground_truth: &Option<PathBuf>,
) -> Result<(), StageError> {
    let mut runner = Runner::new(config, &cli.workdir)?;
    let db = runner.reference_db().map_err(|e| fail("brands", e))?;
    let pred_path = predictions
        .as_ref()
        .map(|p| cli.workdir.join(p))
        .unwrap_or_else(|| runner.out.path("brands_decoded.csv"));
    let gt_path = ground_truth
        .clone()
        .or_else(|| runner.config.brands.ground_truth.clone())
        .map(|p| cli.workdir.join(p))
        .ok_or_else(|| fail("brands", Error::Config("no ground truth given (--ground-truth or brands.ground_truth)".into())))?;
    let pred = read_labels(&pred_path).map_err(|e| fail("brands", e))?.canonicalized(&db);
    let truth = read_labels(&gt_path).map_err(|e| fail("brands", e))?.canonicalized(&db);
    let report = evaluate(&pred, &truth).map_err(|e| fail("brands", e))?;
    runner.out.write_json("brand_eval.json", &report).map_err(|e| fail("brands", e))?;
    print!("{}", report.to_table());
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), StageError> {
    let config = PipelineConfig::load(&cli.workdir.join(&cli.config), &cli.overrides).map_err(|e| fail("config", e))?;
    if let Command::Brands {
        command: BrandsCommand::Eval {
            predictions,
            ground_truth,
        },
    } = &cli.command
    {
        return brands_eval(cli, config, predictions, ground_truth);
    }
    let mut runner = Runner::new(config, &cli.workdir)?;
    match &cli.command {
        Command::Ingest => runner.run_ingest()?,
        Command::Spillover => runner.run_spillover()?,
        Command::Indicators => runner.run_indicators()?,
        Command::Sevi => runner.run_sevi()?,
        Command::Stats => runner.run_stats()?,
        Command::Gwr => runner.run_gwr()?,
        Command::Robustness => runner.run_robustness()?,
        Command::Report => runner.run_report()?,
        Command::Brands { .. } => {
            if runner.config.brands.images.is_none() {
                return Err(fail("brands", Error::Config("brands.images is not configured".into())));
            }
            runner.run_brands()?
        }
        Command::Run { golden } => {
            let manifest = runner.run_all()?;
            if let Some(g) = golden {
                let golden = Manifest::load(&cli.workdir.join(g)).map_err(|e| fail("manifest", e))?;
                let diff = manifest.diff(&golden);
                if !diff.is_empty() {
                    for d in &diff {
                        eprintln!("manifest: {d}");
                    }
                    return Err(fail(
                        "manifest",
                        Error::InsufficientData(format!("{} differences from the golden manifest", diff.len())),
                    ));
                }
                println!("manifest matches {}", g.display());
            }
        }
    }
    for s in &runner.stages {
        println!("{:<12} {} files", s.name, s.outputs.len());
    }
    println!("outputs in {}", runner.out.root().display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
