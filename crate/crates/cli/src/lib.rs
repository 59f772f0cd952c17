//! Command-line front end for `freewalk`.
//!
//! Exit status: 0 on success, 1 when a certificate could not be issued,
//! 2 on any usage, config or input error.

mod commands;
mod config;
mod error;
mod experiments;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use freewalk::stats::{round_json_floats, OUTPUT_DIGITS};
use serde_json::Value;

pub use commands::GeneratorsFile;
pub use config::{ExperimentConfig, ExperimentKind, CONFIG_SCHEMA};
pub use error::{CliError, CliResult};
pub use experiments::MONOTONE_SLACK;

#[derive(Debug, Parser)]
#[command(name = "freewalk", version, about = "Random matrix products over local fields")]
pub struct Cli {
    /// Seed for every random stream; overrides the config.
    #[arg(long, global = true, env = "FREEWALK_SEED")]
    pub seed: Option<u64>,

    /// Output directory; overrides the config.
    #[arg(long, global = true, env = "FREEWALK_OUT")]
    pub out: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "FREEWALK_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cartan decomposition of a matrix file.
    Kak { matrix: PathBuf },
    /// Ping-pong certificate for a generator file.
    Certify {
        gens: PathBuf,
        #[arg(long, env = "FREEWALK_R")]
        r: f64,
        #[arg(long, env = "FREEWALK_EPS")]
        eps: f64,
        /// Decide real generators with interval enclosures of their exact entries.
        #[arg(long, env = "FREEWALK_EXACT")]
        exact: bool,
    },
    /// Lyapunov exponents and the gap test.
    Lyapunov { config: PathBuf },
    /// Decay of the probability that two walks fail the ping-pong test.
    Decay { config: PathBuf },
    /// Convergence of directions and Cartan frames.
    Direction { config: PathBuf },
    /// Asymptotic independence of the Cartan frames.
    Independence { config: PathBuf },
    /// Hyperplane probe of the limit measure.
    Invariant { config: PathBuf },
    /// Several independent walks against the union bound.
    Tuple { config: PathBuf },
}

impl Command {
    fn experiment(&self) -> Option<(ExperimentKind, &Path)> {
        match self {
            Command::Kak { .. } | Command::Certify { .. } => None,
            Command::Lyapunov { config } => Some((ExperimentKind::Lyapunov, config)),
            Command::Decay { config } => Some((ExperimentKind::Decay, config)),
            Command::Direction { config } => Some((ExperimentKind::Direction, config)),
            Command::Independence { config } => Some((ExperimentKind::Independence, config)),
            Command::Invariant { config } => Some((ExperimentKind::Invariant, config)),
            Command::Tuple { config } => Some((ExperimentKind::Tuple, config)),
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit status.
pub fn run_from_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("freewalk: {e}");
            2
        }
    }
}

/// Runs a parsed command line on a pool of the requested size.
pub fn run(cli: &Cli) -> CliResult<u8> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn render(mut v: Value) -> String {
    round_json_floats(&mut v, OUTPUT_DIGITS);
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

fn dispatch(cli: &Cli) -> CliResult<u8> {
    match &cli.command {
        Command::Kak { matrix } => {
            let text = render(commands::kak(matrix)?);
            if let Some(out) = &cli.out {
                write(out, "kak.json", &text)?;
            }
            print!("{text}");
            Ok(0)
        }
        Command::Certify { gens, r, eps, exact } => {
            let cert = commands::certify(gens, *r, *eps, *exact)?;
            let text = render(serde_json::to_value(&cert).expect("certificates serialize"));
            if let Some(out) = &cli.out {
                write(out, "certificate.json", &text)?;
            }
            print!("{text}");
            Ok(if cert.is_certified() { 0 } else { 1 })
        }
        cmd => {
            let (kind, path) = cmd.experiment().expect("remaining commands are experiments");
            let res = config::Resolved::new(kind, path, cli.seed, cli.out.as_deref())?;
            let (artifacts, sidecar) = experiments::run(&res)?;
            for (name, contents) in &artifacts.files {
                write(&res.out_dir, name, contents)?;
            }
            write(&res.out_dir, &format!("{}.json", kind.name()), &render(sidecar.clone()))?;
            for line in &artifacts.summary {
                println!("{line}");
            }
            if let Some(w) = sidecar.get("warnings").and_then(Value::as_array) {
                for w in w.iter().filter_map(Value::as_str) {
                    eprintln!("freewalk: warning: {w}");
                }
            }
            Ok(0)
        }
    }
}
