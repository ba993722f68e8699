//! `mmimo`: run a named experiment from a TOML configuration and write the
//! results as CSV.
//!
//! Exit status: 0 on success, 1 for invalid invocations or configurations,
//! 2 for failures while running or writing output.

mod config;
mod experiments;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use log::info;

use config::{ConfigFile, Experiment, Violation};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("MMIMO_GIT_DESCRIBE"), ")");

#[derive(Parser, Debug)]
#[command(name = "mmimo", version = VERSION, about = "Massive MIMO link and complexity experiments")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write its CSV.
    Run {
        /// ber, evm_vs_m, fxp_sweep, outage, complexity_table, interconnect,
        /// hardening or calibration.
        experiment: String,
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Replace every seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a configuration without running anything.
    Validate {
        config: PathBuf,
        /// Experiment to validate for (default: the one named in the file).
        #[arg(long)]
        experiment: Option<String>,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn violations(path: &Path, v: &[Violation]) -> Self {
        let lines: Vec<String> = v.iter().map(|v| format!("{}: {v}", path.display())).collect();
        Failure::Validation(lines.join("\n"))
    }
}

fn load(path: &Path) -> Result<ConfigFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("{}: cannot read: {e}", path.display())))?;
    ConfigFile::parse(&text).map_err(|v| Failure::violations(path, &[v]))
}

fn parse_experiment(name: &str) -> Result<Experiment, Failure> {
    name.parse().map_err(Failure::Validation)
}

fn validate(path: &Path, experiment: Option<String>) -> Result<(), Failure> {
    let cfg = load(path)?;
    let requested = experiment.as_deref().map(parse_experiment).transpose()?;
    let experiment = cfg.resolve(requested).map_err(|v| Failure::violations(path, &[v]))?;
    let v = cfg.validate(experiment);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Failure::violations(path, &v))
    }
}

fn write_csv(out: File, cfg: &ConfigFile, experiment: Experiment, table: &experiments::Table) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "# mmimo {VERSION}")?;
    writeln!(w, "# experiment: {experiment}")?;
    writeln!(w, "# SNR is per receive antenna, 1/N0, for unit-power symbols and unit-variance channels.")?;
    writeln!(w, "# configuration:")?;
    for line in cfg.to_toml().lines() {
        writeln!(w, "#   {line}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(&table.header)?;
    for row in &table.rows {
        csv.write_record(row)?;
    }
    csv.flush()
}

fn run(
    experiment: &str,
    config: &Path,
    output: &Path,
    seed: Option<u64>,
    workers: Option<usize>,
) -> Result<(), Failure> {
    let experiment = parse_experiment(experiment)?;
    let mut cfg = load(config)?;
    let experiment = cfg.resolve(Some(experiment)).map_err(|v| Failure::violations(config, &[v]))?;
    if let Some(s) = seed {
        cfg.override_seed(s);
    }
    cfg.experiment = Some(experiment);
    let v = cfg.validate(experiment);
    if !v.is_empty() {
        return Err(Failure::violations(config, &v));
    }
    if workers == Some(0) {
        return Err(Failure::Validation("--workers must be at least 1".into()));
    }
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("cannot start worker pool: {e}")))?;
    }
    // Open the output first so an unwritable path fails before any work.
    let file = File::create(output).map_err(|e| Failure::Runtime(format!("{}: {e}", output.display())))?;
    info!("running {experiment} from {}", config.display());
    let table = experiments::run(&cfg, experiment).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_csv(file, &cfg, experiment, &table).map_err(|e| Failure::Runtime(format!("{}: {e}", output.display())))?;
    info!("wrote {} rows to {}", table.rows.len(), output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let result = match cli.command {
        Command::Run {
            experiment,
            config,
            output,
            seed,
            workers,
        } => run(&experiment, &config, &output, seed, workers),
        Command::Validate { config, experiment } => validate(&config, experiment),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation error:\n{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
