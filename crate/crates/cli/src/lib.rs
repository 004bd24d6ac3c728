//! Command-line harness: reads a TOML run configuration, drives one engine
//! capability, and writes a CSV or JSON table.
//!
//! Exit codes: 0 success, 1 a check failed, 2 domain error, 3 configuration
//! error, 64 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qtraj_core::TrajectoryEngine;

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{parse_config, Format, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qtraj", version, about = "Quantum reduced-action trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace a trajectory with one law of motion.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Engine::Floyd)]
        engine: Engine,
    },
    /// Group velocity against the conjugate-momentum velocity on the x grid.
    Compare(Common),
    /// Positions where the group velocity diverges.
    Singularities(Common),
    /// The quantum coordinate transform on the x grid.
    Transform(Common),
    /// Run every identity check; exit 1 if any fails.
    Check(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file (default: standard output).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Engine {
    Floyd,
    Bd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                64
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(&common.config).map_err(|source| CliError::Read {
        path: common.config.clone(),
        source,
    })?;
    let mut config = parse_config(&text, common.config.parent())?;
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    if let Some(f) = common.format {
        config.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    Ok(config)
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (config, table, code) = match cli.command {
        Command::Trace { common, engine } => {
            let config = load(&common)?;
            let engine = match engine {
                Engine::Floyd => TrajectoryEngine::Floyd,
                Engine::Bd => TrajectoryEngine::Bd,
            };
            let table = commands::trace(&config, engine)?;
            (config, table, 0)
        }
        Command::Compare(common) => {
            let config = load(&common)?;
            let table = commands::compare(&config)?;
            (config, table, 0)
        }
        Command::Singularities(common) => {
            let config = load(&common)?;
            let table = commands::singularities(&config)?;
            (config, table, 0)
        }
        Command::Transform(common) => {
            let config = load(&common)?;
            let table = commands::transform(&config)?;
            (config, table, 0)
        }
        Command::Check(common) => {
            let config = load(&common)?;
            let (table, pass) = commands::check(&config)?;
            (config, table, if pass { 0 } else { 1 })
        }
    };
    let text = table.render(config.format);
    match &config.out {
        Some(path) => write_atomically(path, &text)?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            })?,
    }
    Ok(code)
}

/// Writes to a sibling temporary file, then renames it over `path`.
fn write_atomically(path: &Path, text: &str) -> Result<(), CliError> {
    let err = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, text).map_err(err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        err(e)
    })
}
