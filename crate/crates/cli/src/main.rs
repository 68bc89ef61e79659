//! `ladder`: run competitions, attacks and experiments from the shell.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 when the invocation or
//! its input is invalid. Human-readable progress goes to stderr; tables go
//! to stdout or to files under `--out`.

mod args;
mod competition;
mod config;
mod lab;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, UsageError};
use output::Output;

#[derive(Parser)]
#[command(name = "ladder", version, about = "Leaderboard mechanisms for machine-learning competitions")]
struct Cli {
    /// Seed for every randomized step. A fresh one is drawn and reported
    /// when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with flag defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing competition directories.
    #[arg(long, global = true)]
    force: bool,
    /// Only print errors on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a competition directory.
    Init(competition::InitArgs),
    /// Score a submission file and log it.
    Submit(competition::SubmitArgs),
    /// Print a leaderboard as JSON.
    Leaderboard(competition::LeaderboardArgs),
    /// Close a competition, unsealing its private leaderboard.
    Close(competition::CloseArgs),
    /// Run the boosting attack against one mechanism.
    Attack(lab::AttackArgs),
    /// Run a seeded experiment.
    Experiment(lab::ExperimentArgs),
    /// Recompute a recorded competition under other mechanisms.
    Replay(lab::ReplayArgs),
    /// Paired tests of the top submissions against rank 1.
    Significance(lab::SignificanceArgs),
    /// Generate synthetic data.
    #[command(subcommand)]
    Fixtures(lab::FixturesCommand),
    /// Serve competitions over HTTP.
    Serve(competition::ServeArgs),
}

/// Global settings every command sees.
pub struct Ctx {
    pub cfg: Config,
    seed: Option<u64>,
    out: Option<PathBuf>,
    pub force: bool,
}

impl Ctx {
    /// The seed from the flag or config, else a fresh one, which is logged
    /// so the run can be repeated.
    pub fn seed(&self) -> anyhow::Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        if let Some(s) = self.cfg.value::<u64>(None, "seed")? {
            return Ok(s);
        }
        let s: u64 = rand::random();
        log::info!("seed: {s} (generated)");
        Ok(s)
    }

    pub fn output(&self) -> anyhow::Result<Output> {
        let dir = match &self.out {
            Some(d) => Some(d.clone()),
            None => self.cfg.value::<PathBuf>(None, "out")?,
        };
        Output::new(dir)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Ctx {
        cfg: Config::load(cli.config.as_deref())?,
        seed: cli.seed,
        out: cli.out,
        force: cli.force,
    };
    match cli.command {
        Command::Init(a) => competition::init(&ctx, a),
        Command::Submit(a) => competition::submit(&ctx, a),
        Command::Leaderboard(a) => competition::leaderboard(&ctx, a),
        Command::Close(a) => competition::close(a),
        Command::Serve(a) => competition::serve(a),
        Command::Attack(a) => lab::attack(&ctx, a),
        Command::Experiment(a) => lab::experiment(&ctx, a),
        Command::Replay(a) => lab::replay(&ctx, a),
        Command::Significance(a) => lab::significance(&ctx, a),
        Command::Fixtures(c) => lab::fixtures(&ctx, c),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<ladder_core::Error>() {
            let invalid = e.is_validation() || matches!(e, ladder_core::Error::Sealed(_));
            return if invalid { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("LADDER_LOG")
        .format(|buf, record| writeln!(buf, "{}", record.args()))
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
