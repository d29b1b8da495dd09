use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shrinkage::cli_io::{extract_overrides, run_evidence, run_fit, run_quantile, run_simulate, RunConfig};
use shrinkage::Error;

#[derive(Parser)]
#[command(
    name = "shrinkage",
    version,
    about = "Bayesian shrinkage and variable-selection regression",
    after_help = "Any config key can be overridden as --section.key=value, e.g. --prior.family=lasso_pc --prior.r=1"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `section.key = value` config file (a run_manifest.cfg works too).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Full-fidelity simulation settings.
    #[arg(long, global = true)]
    full: bool,
    /// σ² shapes exactly as printed in the source derivations.
    #[arg(long = "legacy-dof", global = true)]
    legacy_dof: bool,
    /// Comma-separated quantile levels.
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Fit one prior to one dataset.
    Fit,
    /// Run the Monte Carlo studies.
    Simulate,
    /// Marginal likelihood, BIC/DIC, Savage-Dickey and g-prior BMA.
    Evidence,
    /// Bayesian quantile regression over a grid of levels.
    Quantile,
}

fn run() -> Result<(), Error> {
    let (args, mut overrides) = extract_overrides(std::env::args().collect())?;
    let cli = Cli::parse_from(args);
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    if let Some(s) = cli.seed {
        overrides.push(("sampler.seed".into(), s.to_string()));
    }
    if cli.full {
        overrides.push(("simulate.full".into(), "true".into()));
    }
    if cli.legacy_dof {
        overrides.push(("prior.legacy_dof".into(), "true".into()));
    }
    if let Some(l) = cli.levels {
        overrides.push(("quantile.levels".into(), l));
    }
    if let Some(o) = cli.out {
        overrides.push(("output.dir".into(), o.display().to_string()));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let out = match cli.command {
        Command::Fit => run_fit(&cfg)?,
        Command::Simulate => run_simulate(&cfg)?,
        Command::Evidence => run_evidence(&cfg)?,
        Command::Quantile => run_quantile(&cfg)?,
    };
    print!("{}", out.report);
    for f in &out.files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
