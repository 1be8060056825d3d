//! Command-line front end: `relu-moments predict|verify|bounds`.
//!
//! Exit codes: 0 when everything passes, 1 when any verdict fails, 2 on
//! configuration errors.

use clap::{Args, Parser, Subcommand};
use relu_moments::config::{parse_usize_list, ExperimentConfig};
use relu_moments::moments::NetworkShape;
use relu_moments::report::Report;
use relu_moments::runner::{self, BoundsConfig};

use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "relu-moments",
    about = "Closed-form moments of ReLU networks at Gaussian initialization, \
             verified by Monte Carlo simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print closed-form predictions for every hidden layer (no simulation).
    Predict(RunArgs),
    /// Run Monte Carlo trials and test every prediction.
    Verify(RunArgs),
    /// Sweep the binomial-sum and Gamma-ratio inequalities.
    Bounds(BoundsArgs),
}

/// Flags mirror the config-file keys one to one; flags win over the file.
#[derive(Args)]
struct RunArgs {
    /// Key-value config file (flags override its entries).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Layer widths, e.g. 4,8,8,1 (input, hidden..., output).
    #[arg(long)]
    shape: Option<String>,
    /// fan-in | fan-out | custom:b1,b2,...
    #[arg(long)]
    schedule: Option<String>,
    /// Input norm along the deterministic direction (1, 0, ..., 0).
    #[arg(long)]
    x_norm: Option<f64>,
    /// Explicit input vector, e.g. 1,0,0,0 (overrides --x-norm).
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Half-width of the first-moment bracket, in (0, 1).
    #[arg(long)]
    eps: Option<f64>,
    /// Constant c in the width condition min n_l >= c k / ln(1+eps).
    #[arg(long)]
    width_constant: Option<f64>,
    /// Pass threshold on |z|.
    #[arg(long)]
    zmax: Option<f64>,
    /// Hidden layers to probe (default: all).
    #[arg(long)]
    probe_layers: Option<String>,
    /// Neuron indices to probe per layer (default: 1,2).
    #[arg(long)]
    probe_neurons: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json | csv
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct BoundsArgs {
    /// Largest n for the binomial-sum sweep.
    #[arg(long, default_value_t = 10_000)]
    n_max: u64,
    /// Largest index for the Gamma-ratio sweep.
    #[arg(long, default_value_t = 10_000)]
    i_max: u64,
    /// Number of sampled points for the scalar sqrt inequality.
    #[arg(long, default_value_t = 100_000)]
    t_samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json | csv
    #[arg(long, default_value = "json")]
    format: String,
}

fn config_failure(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ExperimentConfig::from_key_values(&text).map_err(|e| e.to_string())?
        }
        None => {
            let Some(shape_text) = &args.shape else {
                return Err("either --config or --shape is required".into());
            };
            let widths = parse_usize_list(shape_text).map_err(|e| format!("shape: {e}"))?;
            let shape = NetworkShape::new(widths).map_err(|e| format!("shape: {e}"))?;
            ExperimentConfig::new(shape)
        }
    };
    if args.config.is_some() {
        if let Some(shape_text) = &args.shape {
            let widths = parse_usize_list(shape_text).map_err(|e| format!("shape: {e}"))?;
            config.shape = NetworkShape::new(widths).map_err(|e| format!("shape: {e}"))?;
        }
    }
    let mut set = |key: &str, value: Option<String>| -> Result<(), String> {
        if let Some(v) = value {
            config.set_field(key, &v).map_err(|e| e.to_string())?;
        }
        Ok(())
    };
    set("schedule", args.schedule.clone())?;
    set("x_norm", args.x_norm.map(|v| v.to_string()))?;
    set("x", args.x.clone())?;
    set("trials", args.trials.map(|v| v.to_string()))?;
    set("seed", args.seed.map(|v| v.to_string()))?;
    set("eps", args.eps.map(|v| v.to_string()))?;
    set("width_constant", args.width_constant.map(|v| v.to_string()))?;
    set("z_max", args.zmax.map(|v| v.to_string()))?;
    set("probe_layers", args.probe_layers.clone())?;
    set("probe_neurons", args.probe_neurons.clone())?;
    set("workers", args.workers.map(|v| v.to_string()))?;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn emit(report: &Report, format: &str, out: Option<&PathBuf>) -> Result<(), String> {
    let body = match format {
        "json" => report.to_json(),
        "csv" => report.to_csv(),
        other => return Err(format!("format: expected json or csv, got {other:?}")),
    };
    match out {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(path) => std::fs::write(path, body)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Predict(args) => {
            let config = match build_config(&args) {
                Ok(c) => c,
                Err(e) => return config_failure(e),
            };
            let report = match runner::run_predict(&config) {
                Ok(r) => r,
                Err(e) => return config_failure(e),
            };
            if let Err(e) = emit(&report, &args.format, args.out.as_ref()) {
                return config_failure(e);
            }
            ExitCode::SUCCESS
        }
        Command::Verify(args) => {
            let config = match build_config(&args) {
                Ok(c) => c,
                Err(e) => return config_failure(e),
            };
            let report = match runner::run_verify(&config) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Err(e) = emit(&report, &args.format, args.out.as_ref()) {
                return config_failure(e);
            }
            if report.summary.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Bounds(args) => {
            let bounds = BoundsConfig {
                n_max: args.n_max,
                i_max: args.i_max,
                t_samples: args.t_samples,
                seed: args.seed,
            };
            let report = match runner::run_bounds(&bounds) {
                Ok(r) => r,
                Err(e) => return config_failure(e),
            };
            if let Err(e) = emit(&report, &args.format, args.out.as_ref()) {
                return config_failure(e);
            }
            if report.summary.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
