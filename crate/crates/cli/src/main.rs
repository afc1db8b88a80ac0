use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod store;

/// Attack lab for a Paillier-based behavioral authentication protocol.
#[derive(Debug, Parser)]
#[command(name = "ppba", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RngArgs {
    /// Seed for a reproducible run. Requires --insecure-seeded-rng.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Acknowledge that a seeded run exposes every key and ephemeral to anyone
    /// who knows the seed.
    #[arg(long)]
    pub insecure_seeded_rng: bool,
}

#[derive(Debug, Clone, Args)]
pub struct KeysDir {
    #[arg(long, default_value = "keys")]
    pub keys_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct StateDir {
    #[arg(long, default_value = "state")]
    pub state_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Honest,
    Curious,
    Mitm,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a Paillier key pair.
    Keygen {
        #[arg(long, default_value_t = config::DEFAULT_BITS)]
        bits: u64,
        /// Build the key from two given primes instead (toy sizes, insecure).
        #[arg(long, value_delimiter = ',')]
        toy_primes: Option<Vec<u64>>,
        #[command(flatten)]
        rng: RngArgs,
        #[command(flatten)]
        keys: KeysDir,
    },
    /// Enroll a template: server record and user secrets go to separate files.
    Enroll {
        /// Comma-separated template values.
        #[arg(
            long,
            value_delimiter = ',',
            required_unless_present = "random",
            conflicts_with = "random"
        )]
        features: Option<Vec<u64>>,
        /// Sample a random template of length --t.
        #[arg(long)]
        random: bool,
        #[arg(long = "t", default_value_t = config::DEFAULT_T)]
        t: usize,
        #[arg(long, default_value_t = config::DEFAULT_BOUND)]
        bound: u64,
        #[arg(long, default_value = "user-1")]
        user_id: String,
        #[command(flatten)]
        rng: RngArgs,
        #[command(flatten)]
        keys: KeysDir,
        #[command(flatten)]
        state: StateDir,
    },
    /// Run a scenario and write its report.
    Run {
        #[arg(value_enum)]
        scenario: ScenarioArg,
        /// Generate keys and enrollment in memory instead of reading them.
        #[arg(long)]
        random: bool,
        /// Scenario parameters as JSON; flags given explicitly take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        bits: Option<u64>,
        #[arg(long = "t")]
        t: Option<usize>,
        #[arg(long)]
        bound: Option<u64>,
        /// Decimal acceptance threshold.
        #[arg(long)]
        threshold: Option<String>,
        /// Authentication-time features; sampled when absent.
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<u64>>,
        #[arg(long)]
        user_id: Option<String>,
        #[command(flatten)]
        rng: RngArgs,
        #[command(flatten)]
        keys: KeysDir,
        #[command(flatten)]
        state: StateDir,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the session transcript (JSON Lines).
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Recompute the decision recorded in a transcript.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
        #[command(flatten)]
        keys: KeysDir,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Keygen {
            bits,
            toy_primes,
            rng,
            keys,
        } => commands::keygen(bits, toy_primes, &rng, &keys.keys_dir).map(|()| true),
        Command::Enroll {
            features,
            random: _,
            t,
            bound,
            user_id,
            rng,
            keys,
            state,
        } => commands::enroll(features, t, bound, &user_id, &rng, &keys.keys_dir, &state.state_dir).map(|()| true),
        Command::Run {
            scenario,
            random,
            config,
            bits,
            t,
            bound,
            threshold,
            features,
            user_id,
            rng,
            keys,
            state,
            out,
            transcript,
        } => config::RunConfig::resolve(config::RunOverrides {
            config,
            bits,
            t,
            bound,
            threshold,
            features,
            user_id,
            rng,
        })
        .and_then(|cfg| {
            commands::run(
                scenario,
                random,
                &cfg,
                &keys.keys_dir,
                &state.state_dir,
                out.as_deref(),
                transcript.as_deref(),
            )
        }),
        Command::Replay { transcript, keys, out } => commands::replay(&transcript, &keys.keys_dir, out.as_deref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
