mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "selcascade", version, about = "Selective multi-scale cascaded landmark regression")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (computation is single-threaded; accepted for scripting).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `key=value` override of any configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic dataset (PGM images, `.pts` files, manifest).
    GenData,
    /// Train a cascade on `data`, validating on `val_data`.
    Train,
    /// Run the selective cascade on one image.
    Infer,
    /// Early-exit threshold sweep with matched random baselines and oracle.
    SweepPolicy,
    /// Per-sample balancing distances and duplication counts.
    BalanceReport,
    /// Mean first-iteration attention per patch.
    AttentionReport,
    /// Closed-form multiply-add breakdown of the configured model.
    CountMma,
}

/// Exit code for an invalid final regression (`infer` only).
pub const EXIT_INVALID: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<selcascade::Error>() {
            return match e {
                selcascade::Error::Parse { .. } | selcascade::Error::Io { .. } => 2,
                selcascade::Error::Numeric(_) => 3,
                _ => 1,
            };
        }
        if cause.downcast_ref::<commands::DataError>().is_some()
            || cause.downcast_ref::<std::io::Error>().is_some()
        {
            return 2;
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let mut config = RunConfig::resolve(cli.common.config.as_deref(), &cli.common.sets)?;
    if let Some(seed) = cli.common.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.common.out {
        config.out = out;
    }
    if let Some(threads) = cli.common.threads {
        anyhow::ensure!(threads >= 1, "threads must be at least 1");
        config.threads = threads;
    }
    eprintln!("# resolved configuration\n{}", config.to_toml());
    match cli.command {
        Command::GenData => commands::gen_data(&config),
        Command::Train => commands::train(&config),
        Command::Infer => commands::infer(&config),
        Command::SweepPolicy => commands::sweep_policy(&config),
        Command::BalanceReport => commands::balance_report(&config),
        Command::AttentionReport => commands::attention(&config),
        Command::CountMma => commands::count_mma(&config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
