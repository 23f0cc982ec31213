use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use sepsim::commands::{cmd_check, cmd_estimate, cmd_sweep, cmd_thresholds, write_text, Globals, Output};
use sepsim::output::Format;
use sepsim_core::model::Dimension;
use sepsim_core::montecarlo::{ExperimentSpec, Scenario};

/// Binary proximity sensor separability experiments.
#[derive(Debug, Parser)]
#[command(name = "sepsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count (overrides the config file).
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write an SVG plot of a sweep here.
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    /// Record wall-clock time per row (otherwise written as 0).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the closed-form thresholds for a scenario.
    Thresholds(ThresholdArgs),
    /// Estimate one success probability from a run configuration.
    Estimate { config: PathBuf },
    /// Estimate along the configured sweep axis.
    Sweep { config: PathBuf },
    /// Analyze a target/sensor instance file.
    Check { instance: PathBuf },
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct ThresholdArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    dimension: u8,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long = "c-n")]
    c_n: Option<f64>,
    #[arg(long)]
    f: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    theta1: Option<f64>,
    #[arg(long)]
    theta2: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    /// Draw count for the coupon scenario.
    #[arg(long)]
    m: Option<f64>,
}

impl ThresholdArgs {
    fn spec(&self) -> anyhow::Result<ExperimentSpec> {
        let scenario: Scenario = self.scenario.parse()?;
        let mut spec = ExperimentSpec::new(scenario, self.n);
        spec.dimension = Dimension::from_u8(self.dimension)?;
        spec.a = self.a;
        spec.c_n = self.c_n;
        spec.d = self.d;
        spec.sensors = self.m;
        let fields = [
            (self.c, &mut spec.c),
            (self.f, &mut spec.f),
            (self.g, &mut spec.g),
            (self.alpha, &mut spec.alpha),
            (self.beta, &mut spec.beta),
            (self.alpha1, &mut spec.alpha1),
            (self.theta1, &mut spec.theta1),
            (self.theta2, &mut spec.theta2),
            (self.gamma, &mut spec.gamma),
            (self.eps, &mut spec.eps),
        ];
        for (given, field) in fields {
            if let Some(v) = given {
                *field = v;
            }
        }
        Ok(spec)
    }
}

fn threads_from_env() -> anyhow::Result<Option<usize>> {
    match std::env::var("SEPSIM_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let t: usize = v.trim().parse().with_context(|| format!("SEPSIM_THREADS must be a positive integer, got '{v}'"))?;
            if t == 0 {
                bail!("SEPSIM_THREADS must be a positive integer, got '{v}'");
            }
            Ok(Some(t))
        }
        _ => Ok(None),
    }
}

fn emit(output: Output) -> anyhow::Result<()> {
    match output.path {
        Some(path) => write_text(&path, &output.text)?,
        None => std::io::stdout().lock().write_all(output.text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let globals = Globals {
        seed: cli.seed,
        trials: cli.trials,
        format: cli.format,
        out: cli.out,
        plot: cli.plot,
        timing: cli.timing,
        threads: threads_from_env()?,
    };
    match cli.command {
        Command::Thresholds(args) => {
            let (text, err) = cmd_thresholds(&args.spec()?, globals.format)?;
            emit(Output { text, path: globals.out })?;
            if let Some(err) = err {
                return Err(err.into());
            }
        }
        Command::Estimate { config } => emit(cmd_estimate(&config, &globals)?)?,
        Command::Sweep { config } => emit(cmd_sweep(&config, &globals)?)?,
        Command::Check { instance } => emit(cmd_check(&instance, &globals)?)?,
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
