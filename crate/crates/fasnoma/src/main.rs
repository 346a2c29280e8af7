use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fasnoma::meta::{sidecar_path, Metadata};
use fasnoma::recipes::Recipe;
use fasnoma::sweep::run_sweep;
use fasnoma::validate::{self_validate, Budget, Hooks};
use fasnoma::{point, Error, RunConfig, SweepSpec};

/// Outage probability of fluid-antenna NOMA users: sweeps, single points
/// and self-validation.
#[derive(Debug, Parser)]
#[command(name = "fasnoma", version)]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the sweep described by a config file and emit CSV.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Evaluate one configuration and print every intermediate value.
    Point {
        config: PathBuf,
        /// Evaluate this sweep row (0-based, curve-major) instead of the base.
        #[arg(long)]
        row: Option<usize>,
    },
    /// Run the built-in cross-validation suite.
    Validate {
        #[arg(long, value_enum, default_value = "small")]
        budget: Budget,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the JSON report here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a shipped figure recipe.
    Recipe {
        #[arg(value_enum)]
        name: Recipe,
        /// Override the recipe's Monte Carlo budget (0 disables).
        #[arg(long)]
        mc_trials: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, clap::Args)]
struct Output {
    /// CSV destination; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Metadata destination; defaults to `<output>.meta.json` when
    /// `--output` is given.
    #[arg(long)]
    meta: Option<PathBuf>,
}

fn write_table(spec: &SweepSpec, command: &str, out: &Output) -> Result<(), Error> {
    let table = run_sweep(spec)?;
    match &out.output {
        Some(p) => table.write_csv(std::fs::File::create(p)?)?,
        None => table.write_csv(std::io::stdout().lock())?,
    }
    let meta = out.meta.clone().or_else(|| out.output.as_deref().map(sidecar_path));
    if let Some(m) = meta {
        let mut json = Metadata::new(command, &spec.config, spec.rows.len()).to_json();
        json.push('\n');
        std::fs::write(m, json)?;
    }
    Ok(())
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Sweep { config, out } => {
            let spec = RunConfig::load(&config)?;
            write_table(&spec, &format!("sweep {}", config.display()), &out)?;
        }
        Command::Point { config, row } => {
            let spec = RunConfig::load(&config)?;
            let r = point::evaluate_point(&spec, row)?;
            emit(&r.to_string(), None)?;
        }
        Command::Validate { budget, seed, output } => {
            let report = self_validate(budget, seed, Hooks::default())?;
            let mut json = report.to_json();
            json.push('\n');
            emit(&json, output.as_deref())?;
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("validation failed: {} = {} > {}", c.name, c.statistic, c.threshold);
            }
            if !report.passed {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Recipe { name, mc_trials, out } => {
            let spec = name.spec(mc_trials)?;
            write_table(&spec, &format!("recipe {}", name.name()), &out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    // set explicitly so RAYON_NUM_THREADS has no say
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    pool.install(|| match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    })
}
