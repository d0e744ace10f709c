use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use optobae::harness::{
    self, load_config, perturbation_table, reproduce_figure, reproduce_with, run_sweep,
    steady_state_table, trajectory_table, Figure, OutputFormat, RunConfig, SystemKind, Table,
};
use optobae::Error;

#[derive(Parser)]
#[command(name = "optobae", version, about = "Conditional dynamics of two-tone backaction-evading measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps and ensembles.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed of the stochastic trajectory.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Periodic conditional steady state at the configured point.
    SteadyState,
    /// Steady-state observables over the configured grid.
    Sweep,
    /// One stochastic trajectory of the conditional means.
    Trajectory,
    /// Second-order Floquet correction against the numerical period mean.
    Perturb,
    /// Separability classes of the three-mode system over the configured grid.
    Classify,
    /// Regenerates the data of a figure panel.
    Reproduce {
        /// One of fig2, fig3a, fig3b, fig3c, fig3d, fig4a, fig4b, fig4c.
        figure: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: Cli) -> optobae::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("threads: {e}")))?;
    }
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = cli.out {
        config.output.dir = dir;
    }
    if let Some(f) = cli.format {
        config.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    let emit = |table: &Table, stem: &str, summary: &Value| -> optobae::Result<()> {
        let path = table.write(&config.output.dir, stem, config.output.format)?;
        println!("{}", serde_json::to_string_pretty(summary).unwrap_or_default());
        eprintln!("wrote {}", path.display());
        Ok(())
    };

    match cli.command {
        Command::SteadyState => {
            let (t, s) = steady_state_table(&config)?;
            emit(&t, &format!("{}_steady_state", config.output.name), &s)
        }
        Command::Perturb => {
            let (t, s) = perturbation_table(&config)?;
            emit(&t, &format!("{}_perturb", config.output.name), &s)
        }
        Command::Trajectory => {
            let (t, s) = trajectory_table(&config, cli.seed)?;
            emit(&t, &format!("{}_trajectory_{}", config.output.name, cli.seed), &s)
        }
        Command::Sweep | Command::Classify => {
            if matches!(cli.command, Command::Classify) && config.system.kind != SystemKind::ThreeMode {
                return Err(Error::InvalidArgument(
                    "classify needs `kind = \"three-mode\"` in [system]".into(),
                ));
            }
            let table = run_sweep(&config)?;
            let failed = table.rows.iter().filter(|r| r.failed()).count();
            let path = harness::write_table(&table, &config)?;
            eprintln!("{} points, {failed} failed; wrote {}", table.rows.len(), path.display());
            Ok(())
        }
        Command::Reproduce { figure } => {
            let mut config = config;
            let fig: Figure = figure.parse()?;
            let dir = config.output.dir.clone();
            let report = match &cli.config {
                Some(_) => {
                    if config.output.name == RunConfig::default().output.name {
                        config.output.name = fig.name().into();
                    }
                    reproduce_with(fig, &config, &dir)?
                }
                None => reproduce_figure(fig, &dir)?,
            };
            for f in &report.files {
                eprintln!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}
