use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use transmutation_cli::{run, CliError, Experiment, ExperimentConfig, EXIT_TOLERANCE};

/// Transmutation laboratory: batch experiments writing CSV with a JSON metadata line.
///
/// Values come from `--config` first; any flag given on the command line
/// replaces the matching field. Unset values take per-experiment defaults.
#[derive(Parser)]
#[command(name = "transmute-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the dispersion hypotheses of a scheme on |alpha| <= delta
    Certify(Common),
    /// Kernel heat map, decay ladder and operator-norm check
    Kernel(Common),
    /// Forward and reverse representation errors on a random filtered state
    Reconstruct(Common),
    /// Observability constants of the transport model along a tau ladder
    ObsSweep(Common),
    /// Wave-packet norm and spatial concentration
    Sharpness(Common),
    /// Discrete Ingham frame bounds for mu_j = 2 pi j
    Ingham(Common),
    /// Weak observability of the string from a point x0
    WeakObs(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Comma separated, e.g. 0.05,0.025,0.0125
    #[arg(long, value_delimiter = ',')]
    tau_ladder: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Final observation time
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// midpoint | gauss4 | exact | newmark:<beta>
    #[arg(long)]
    scheme: Option<String>,
    /// Spectrum truncation N
    #[arg(long)]
    modes: Option<i64>,
    #[arg(long)]
    x0: Option<f64>,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Self::Certify(c) => (Experiment::SchemesCertify, c),
            Self::Kernel(c) => (Experiment::KernelEval, c),
            Self::Reconstruct(c) => (Experiment::Reconstruct, c),
            Self::ObsSweep(c) => (Experiment::ObservabilitySweep, c),
            Self::Sharpness(c) => (Experiment::Sharpness, c),
            Self::Ingham(c) => (Experiment::Ingham, c),
            Self::WeakObs(c) => (Experiment::WeakObs, c),
        }
    }
}

fn config(experiment: Experiment, flags: Common) -> Result<ExperimentConfig, CliError> {
    let base = match &flags.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(chosen) = base.experiment {
        if chosen != experiment {
            return Err(CliError::Validation(format!(
                "config selects {} but the subcommand is {}",
                chosen.name(),
                experiment.name()
            )));
        }
    }
    let overrides = ExperimentConfig {
        experiment: Some(experiment),
        scheme: flags.scheme,
        tau: flags.tau,
        tau_ladder: flags.tau_ladder,
        delta: flags.delta,
        eps: flags.eps,
        t_final: flags.t_final,
        modes: flags.modes,
        x0: flags.x0,
        out: flags.out,
        seed: flags.seed,
        ..Default::default()
    };
    Ok(base.overridden_by(overrides))
}

fn main() -> ExitCode {
    let (experiment, flags) = Cli::parse().command.split();
    let outcome = config(experiment, flags)
        .and_then(|cfg| run(&cfg))
        .with_context(|| format!("{} failed", experiment.name()));
    match outcome {
        Ok(report) => {
            for t in &report.tolerances {
                let tag = if t.passed { "ok" } else { "MISSED" };
                println!("{tag:>6}  {}: {:.6e} {} {:.6e}", t.name, t.achieved, t.op, t.target);
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_TOLERANCE as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
