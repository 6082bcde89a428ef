mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;
use crate::output::{Provenance, RunOutput};

/// Pedigree coalescent simulations and their structured scaling limits.
#[derive(Parser)]
#[command(name = "pedcoal", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Falls back to $PEDCOAL_OUT, then ./pedcoal-out.
    #[arg(long, global = true, env = "PEDCOAL_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override a config value by dotted path, e.g. `--set model.psi=0.3`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Shortcuts for frequently changed config values.
#[derive(Args, Default)]
struct ModelArgs {
    /// Model preset (`model.preset`).
    #[arg(long)]
    preset: Option<String>,
    /// Reference deme size N (`model.population_scale`).
    #[arg(long)]
    population: Option<u64>,
    /// Sample size, all copies in deme 0 unless `experiment.sampling` is set (`experiment.sample_size`).
    #[arg(long)]
    n: Option<usize>,
    /// Observation times, comma separated (`experiment.times`).
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in models with their parameters and defaults.
    Presets,
    /// Write the first `experiment.generations` generations of a pedigree.
    SimulatePedigree(ModelArgs),
    /// Run gene genealogies at `experiment.loci` loci on each of `experiment.pedigrees` pedigrees.
    SimulateQuenched(ModelArgs),
    /// Sample Ψ realizations and the gene trees they drive.
    SimulateLimit(ModelArgs),
    /// Transition probabilities exp(t𝓛) of the limiting coalescent.
    Kernel(ModelArgs),
    /// Moment of the conditional cylinder probability, finite N against the limit.
    Moments(ModelArgs),
    /// Annealed finite-N estimates next to exact limit values, as tidy CSV.
    Compare(ModelArgs),
    /// Site-frequency-spectrum functionals of simulated genealogies.
    Sfs(ModelArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Presets => "presets",
            Command::SimulatePedigree(_) => "simulate-pedigree",
            Command::SimulateQuenched(_) => "simulate-quenched",
            Command::SimulateLimit(_) => "simulate-limit",
            Command::Kernel(_) => "kernel",
            Command::Moments(_) => "moments",
            Command::Compare(_) => "compare",
            Command::Sfs(_) => "sfs",
        }
    }

    fn model_args(&self) -> Option<&ModelArgs> {
        match self {
            Command::Presets => None,
            Command::SimulatePedigree(a)
            | Command::SimulateQuenched(a)
            | Command::SimulateLimit(a)
            | Command::Kernel(a)
            | Command::Moments(a)
            | Command::Compare(a)
            | Command::Sfs(a) => Some(a),
        }
    }
}

fn resolve_config(global: &GlobalArgs, args: &ModelArgs) -> Result<Config, CliError> {
    let text = global
        .config
        .as_ref()
        .map(|p| std::fs::read_to_string(p).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", p.display()))))
        .transpose()?;
    let mut overrides = global.overrides.clone();
    overrides.extend(args.preset.as_ref().map(|p| format!("model.preset=\"{p}\"")));
    overrides.extend(args.population.map(|n| format!("model.population_scale={n}")));
    overrides.extend(args.n.map(|n| format!("experiment.sample_size={n}")));
    if !args.t.is_empty() {
        let times: Vec<String> = args.t.iter().map(|t| format!("{t:?}")).collect();
        overrides.push(format!("experiment.times=[{}]", times.join(",")));
    }
    let mut config = config::resolve(text.as_deref(), &overrides)?;
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(k) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    let Some(args) = cli.command.model_args() else {
        emit(&serde_json::to_string_pretty(&commands::presets())?);
        return Ok(());
    };
    let config = resolve_config(&cli.global, args)?;
    let name = cli.command.name();
    let dir = cli.global.out.clone().unwrap_or_else(|| PathBuf::from("pedcoal-out"));
    let mut out = RunOutput::new(&dir, Provenance::new(name, &config))?;
    let summary = match &cli.command {
        Command::Presets => unreachable!("handled above"),
        Command::SimulatePedigree(_) => commands::simulate_pedigree(&config, &mut out)?,
        Command::SimulateQuenched(_) => commands::simulate_quenched(&config, &mut out)?,
        Command::SimulateLimit(_) => commands::simulate_limit(&config, &mut out)?,
        Command::Kernel(_) => commands::kernel(&config, &mut out)?,
        Command::Moments(_) => commands::moments(&config, &mut out)?,
        Command::Compare(_) => commands::compare(&config, &mut out)?,
        Command::Sfs(_) => commands::sfs(&config, &mut out)?,
    };
    let metadata = out.finish(&config, summary.clone())?;
    emit(&serde_json::json!({ "command": name, "metadata": metadata, "summary": summary }).to_string());
    Ok(())
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Validation(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
