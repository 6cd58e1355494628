//! `finfom`: generate trials, train surrogates, sweep the gait space and pick
//! gaits from the command line.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finfom::domain::FinMaterial;
use finfom::surrogate::ModelKind;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "finfom",
    version,
    about = "Flapping-fin gait surrogates and efficiency sweeps"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for trial noise and network initialisation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Restrict to these materials (repeatable).
    #[arg(long, global = true)]
    material: Vec<FinMaterial>,
    /// Output root; data and models default to subdirectories of it.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one synthetic trial file per material.
    GenData,
    /// Train surrogates and write the evaluation table.
    Train(TrainArgs),
    /// Evaluate the surrogates over the full gait grid.
    Sweep(KindArg),
    /// Export one stroke x pitch plane of a sweep.
    Contour {
        #[command(flatten)]
        kind: KindArg,
        /// Flapping frequency of the plane, Hz; must be a grid level
        #[arg(long)]
        freq: f64,
        /// Stroke-pitch offset of the plane, deg; must be a grid level
        #[arg(long)]
        spo: f64,
    },
    /// Export efficiency trends by frequency and by SPO.
    Trends(KindArg),
    /// Pick the gait that best meets a goal.
    Select(SelectArgs),
    /// Measure forward passes per second of every trained model.
    Bench,
}

#[derive(Args)]
struct KindArg {
    /// Model kind whose predictions fill the grid.
    #[arg(long)]
    kind: Option<ModelKind>,
}

#[derive(Args)]
struct TrainArgs {
    /// Model kinds to train (repeatable); all four by default.
    #[arg(long)]
    kind: Vec<ModelKind>,
    /// Epoch count for the networks.
    #[arg(long)]
    epochs: Option<usize>,
    /// Train on every gait instead of holding out the interior ones.
    #[arg(long)]
    all_gaits: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    MaxEfficiency,
    MeetThrust,
    MaxThrust,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    kind: KindArg,
    /// Defaults to meet-thrust when a target is given, else max-efficiency.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Thrust to meet, N.
    #[arg(long)]
    target_thrust: Option<f64>,
    /// Allowed thrust deviation, N.
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
    /// Efficiency weight in [0, 1]; 1 ranks feasible gaits by efficiency only.
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    /// Reference velocity, m/s.
    #[arg(long)]
    velocity: Option<f64>,
    /// Number of ranked alternatives to print.
    #[arg(long, default_value_t = 1)]
    top: usize,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if !cli.material.is_empty() {
        cfg.materials = cli.material.clone();
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = resolve_config(&cli)?;
    let kind = |k: &KindArg| k.kind.unwrap_or(cfg.kind);
    match &cli.command {
        Command::GenData => commands::gen_data(&cfg),
        Command::Train(a) => {
            if a.epochs.is_some() {
                cfg.epochs = a.epochs;
            }
            cfg.validate()?;
            let kinds = if a.kind.is_empty() {
                ModelKind::ALL.to_vec()
            } else {
                a.kind.clone()
            };
            commands::train(&cfg, &kinds, a.all_gaits)
        }
        Command::Sweep(k) => commands::sweep(&cfg, kind(k)),
        Command::Contour { kind: k, freq, spo } => commands::contour(&cfg, kind(k), *freq, *spo),
        Command::Trends(k) => commands::trends(&cfg, kind(k)),
        Command::Select(a) => {
            use finfom::selector::SelectionMode;
            let mode = match (a.mode, a.target_thrust) {
                (Some(ModeArg::MeetThrust), None) => {
                    return Err(CliError::Input(
                        "--mode meet-thrust needs --target-thrust".into(),
                    ))
                }
                (Some(ModeArg::MeetThrust) | None, Some(target)) => SelectionMode::MeetThrust {
                    target,
                    tolerance: a.tolerance,
                },
                (Some(ModeArg::MaxThrust), _) => SelectionMode::MaxThrust,
                (Some(ModeArg::MaxEfficiency) | None, _) => SelectionMode::MaxEfficiency,
            };
            let velocity = a.velocity.unwrap_or(cfg.velocity);
            commands::select(&cfg, kind(&a.kind), mode, a.weight, velocity, a.top)
        }
        Command::Bench => commands::bench(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("FINFOM_LOG", "info"))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
