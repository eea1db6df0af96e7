//! `riskdecode`: perceived-risk pipeline from event generation to
//! attribution reports.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use riskdecode_core::reconstruction::Method;

use artifacts::Workspace;
use commands::Context_;
use config::{PipelineConfig, Selection};

#[derive(Parser)]
#[command(name = "riskdecode", version, about = "Perceived-risk reconstruction, surrogate models and attribution")]
struct Cli {
    /// Output directory shared by all stages.
    #[arg(long, global = true, default_value = "riskdecode_out")]
    out: PathBuf,
    /// Seed for every random choice; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Family (MB, HB, LC, SVM), network group (e.g. LC_normal) or scenario.
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// JSON pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the event catalog and 10 Hz trajectories.
    Generate,
    /// Validate and filter ratings (file, dataset directory or synthetic).
    Ingest {
        path: Option<PathBuf>,
        #[arg(long, env = "RISKDECODE_DATA_DIR", hide_env_values = true)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        synthetic: bool,
    },
    /// Turn clip ratings into continuous curves.
    Reconstruct {
        #[arg(long, default_value = "pchip", value_parser = ["linear", "quadratic_monotone", "pchip"])]
        method: String,
    },
    /// Export per-group feature matrices and normalization statistics.
    Features,
    /// Random-search calibration of PCAD and DRF.
    Calibrate {
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        model: Option<String>,
    },
    /// Train the per-group surrogate networks.
    Train {
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Predict risk curves with the trained networks and calibrated models.
    Predict,
    /// Shapley attributions, global rankings and heatmap data.
    Explain {
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Plot-ready comparison, curve, ranking and heatmap exports.
    Report,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = PipelineConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let selection = Selection::parse(cli.scenario.as_deref())?;
    let mut cx = Context_ {
        ws: Workspace::new(cli.out, seed),
        cfg,
        selection,
    };
    let result = match cli.command {
        Command::Generate => commands::generate(&mut cx),
        Command::Ingest {
            path,
            data_dir,
            synthetic,
        } => commands::ingest(&mut cx, path.or(data_dir).as_deref(), synthetic),
        Command::Reconstruct { method } => commands::reconstruct_cmd(&mut cx, Method::parse(&method)?),
        Command::Features => commands::features(&mut cx),
        Command::Calibrate { draws, model } => commands::calibrate_cmd(&mut cx, draws, model.as_deref()),
        Command::Train { epochs } => commands::train(&mut cx, epochs),
        Command::Predict => commands::predict(&mut cx),
        Command::Explain { permutations, stride } => commands::explain(&mut cx, permutations, stride),
        Command::Report => commands::report(&mut cx),
    };
    result?;
    for p in cx.ws.written() {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
