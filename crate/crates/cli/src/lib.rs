//! Batch experiment driver: train, evaluate, sweep, estimate CMI, audit and
//! generate data, writing JSON and CSV reports to an output directory.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use fried_core::Error;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "FRIED_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fried", version, about = "Fair representation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Train a model; writes model.json and history.csv.
    Train,
    /// Downstream Δ_DP and accuracy of a trained model; writes eval.json.
    Eval,
    /// Train and evaluate over a (β, λ) grid; writes sweep_all.csv and sweep_front.csv.
    Sweep,
    /// Separability check of a trained model; writes cmi.json.
    Cmi,
    /// Direct and indirect influence audit; writes audit_direct.csv and audit_indirect.csv.
    Audit,
    /// Materialize the configured dataset; writes dataset.csv.
    GenData,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Usage(_) => EXIT_CONFIG,
        Error::Divergence(_) => EXIT_DIVERGENCE,
        _ => EXIT_DATA,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    // A pool may already exist when called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), Error> {
    configure_threads()?;
    let config_path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let out = cli.out.as_ref().ok_or_else(|| Error::Config("--out is required".into()))?;
    let cfg = config::Resolved::from_file(config_path, cli.seed)?;
    log::info!("{:?} with seed {}", cli.command, cli.seed);
    let outputs = match cli.command {
        Command::Train => commands::train_cmd(&cfg, cli.seed)?,
        Command::Eval => commands::eval_cmd(&cfg, out, cli.seed)?,
        Command::Sweep => commands::sweep_cmd(&cfg, cli.seed)?,
        Command::Cmi => commands::cmi_cmd(&cfg, out, cli.seed)?,
        Command::Audit => commands::audit_cmd(&cfg, out, cli.seed)?,
        Command::GenData => commands::gen_data(&cfg, cli.seed)?,
    };
    outputs.commit(out)?;
    for (name, _) in &outputs.files {
        log::info!("wrote {}", out.join(name).display());
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Divergence("x".into())), EXIT_DIVERGENCE);
        assert_eq!(exit_code(&Error::Schema("x".into())), EXIT_DATA);
    }

    #[test]
    fn usage_errors_exit_with_config_code() {
        assert_eq!(main_with_args(["fried", "nope"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["fried", "train", "--out", "x"]), EXIT_CONFIG);
    }
}
