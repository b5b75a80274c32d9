mod config;
mod figures;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mbcs::MbcsError;

use crate::config::{ExperimentConfig, Report};
use crate::output::Manifest;
use crate::run::Artifact;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

const DEFAULT_OUTPUT_DIR: &str = "mbcs-out";

/// Simulate multi-photon interference in linear optical networks.
#[derive(Parser)]
#[command(name = "mbcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Sampling seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Only print errors.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its outputs.
    Run { config: PathBuf },
    /// Check a config without computing anything.
    Validate { config: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(message: String) -> Self {
        Self {
            code: EXIT_IO,
            message,
        }
    }
}

impl From<MbcsError> for Failure {
    fn from(e: MbcsError) -> Self {
        let code = match e {
            MbcsError::NumericalConsistency(_) => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn load(path: &Path) -> Result<(String, Result<ExperimentConfig, config::Violation>), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
    let parsed = config::parse(&text);
    Ok((text, parsed))
}

fn print_report(report: &Report, quiet: bool) {
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    if !quiet {
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
    }
}

fn validate(path: &Path, cli: &Cli) -> Result<(), Failure> {
    let (_, parsed) = load(path)?;
    let config = parsed.map_err(|v| Failure {
        code: EXIT_VALIDATION,
        message: format!("error: {v}"),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (experiment, report) = config::prepare(&config, base, cli.seed);
    print_report(&report, cli.quiet);
    match experiment {
        Some(_) => {
            if !cli.quiet {
                println!(
                    "{}: ok ({} warnings)",
                    path.display(),
                    report.warnings.len()
                );
            }
            Ok(())
        }
        None => Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("{}: {} errors", path.display(), report.errors.len()),
        }),
    }
}

fn run(path: &Path, cli: &Cli) -> Result<(), Failure> {
    let (text, parsed) = load(path)?;
    let config = parsed.map_err(|v| Failure {
        code: EXIT_VALIDATION,
        message: format!("error: {v}"),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (experiment, report) = config::prepare(&config, base, cli.seed);
    print_report(&report, cli.quiet);
    let Some(experiment) = experiment else {
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("{}: {} errors", path.display(), report.errors.len()),
        });
    };
    let mut artifacts = run::execute(&experiment)?;
    let manifest = Manifest {
        tool: "mbcs",
        version: env!("CARGO_PKG_VERSION"),
        library_version: mbcs::VERSION,
        config_sha256: output::sha256_hex(text.as_bytes()),
        seed: experiment.seed,
        mode: config.mode.name(),
        outputs: artifacts.iter().map(|a| a.name).collect(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    artifacts.push(Artifact {
        name: "manifest.json",
        bytes,
    });
    let dir = match (&cli.out, &config.output_dir) {
        (Some(out), _) => out.clone(),
        (None, Some(dir)) => base.join(dir),
        (None, None) => PathBuf::from(DEFAULT_OUTPUT_DIR),
    };
    output::commit(&dir, &artifacts)
        .map_err(|e| Failure::io(format!("cannot write to {}: {e}", dir.display())))?;
    log::info!("wrote {} files to {}", artifacts.len(), dir.display());
    if !cli.quiet {
        println!("{}", dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Run { config } => run(config, &cli),
        Command::Validate { config } => validate(config, &cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
