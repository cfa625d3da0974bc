use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kondolab::sweep::{load_config, run, RunOverrides, SweepConfig, SweepError, Task};

#[derive(Parser)]
#[command(
    name = "kondolab",
    version,
    about = "Deterministic sweeps for surface-code memories in a critical bath"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON sweep configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing output.
    #[arg(long)]
    force: bool,
    /// Worker threads (overrides the configuration).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// RG trajectories: one CSV per start plus index.csv.
    Flow(Common),
    /// Phase portrait CSV over a (j_perp, j_z) grid.
    PhaseDiagram(Common),
    /// Exact matching sums on unit-spaced strings.
    Matching(Common),
    /// Exhaustive contour-decoder census.
    Census(Common),
    /// Lifetime table over (L, z, s, lambda, T, epsilon).
    Lifetime(Common),
    /// Hardware preset report.
    Preset {
        #[command(flatten)]
        common: Common,
        /// superconducting or neutral_atom
        #[arg(long)]
        name: Option<String>,
    },
    /// Run whatever task the configuration names.
    Sweep(Common),
}

fn load(common: &Common, expected: Option<Task>) -> Result<SweepConfig, SweepError> {
    let path = common.config.as_ref().ok_or_else(|| SweepError::Config {
        path: "--config".into(),
        message: "a configuration file is required".into(),
    })?;
    let cfg = load_config(path)?;
    if let Some(task) = expected {
        if cfg.task != task {
            return Err(SweepError::Config {
                path: "task".into(),
                message: format!("subcommand expects task {task}, config names {}", cfg.task),
            });
        }
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), SweepError> {
    let (cfg, common) = match &cli.command {
        Command::Flow(c) => (load(c, Some(Task::Flow))?, c),
        Command::PhaseDiagram(c) => (load(c, Some(Task::PhaseDiagram))?, c),
        Command::Matching(c) => (load(c, Some(Task::MatchingProbe))?, c),
        Command::Census(c) => (load(c, Some(Task::Census))?, c),
        Command::Lifetime(c) => (load(c, Some(Task::Lifetime))?, c),
        Command::Sweep(c) => (load(c, None)?, c),
        Command::Preset { common, name } => {
            let mut cfg = match (&common.config, &common.out) {
                (Some(_), _) => load(common, Some(Task::Preset))?,
                (None, Some(out)) => SweepConfig::new(Task::Preset, out.clone()),
                (None, None) => {
                    return Err(SweepError::Config {
                        path: "--out".into(),
                        message: "preset needs --config or --out".into(),
                    })
                }
            };
            if name.is_some() {
                cfg.name = name.clone();
            }
            (cfg, common)
        }
    };
    let overrides = RunOverrides {
        output_path: common.out.clone(),
        workers: common.workers,
        force: common.force,
    };
    let summary = run(&cfg, &overrides)?;
    eprintln!(
        "{}: wrote {} record(s) to {}",
        summary.task,
        summary.records,
        summary.output_path.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
