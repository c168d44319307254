//! `dfrc`: run waveform design experiments from a configuration file.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible constraints,
//! 4 numeric failure, 1 anything else (I/O).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dfrc_core::harness::{self, Command, ConfigFile, Overrides};
use dfrc_core::{DfrcError, Method};

#[derive(Parser)]
#[command(
    name = "dfrc",
    version,
    about = "Constructive-interference DFRC waveform design experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Radar SINR versus user SNR target for every method (tradeoff.csv).
    Tradeoff(RunArgs),
    /// Averaged transmit and receive beampatterns at the operating target (beampattern.csv).
    Beampattern(RunArgs),
    /// User and eavesdropper symbol error rates over the SNR sweep (security.csv).
    Security(RunArgs),
    /// Solve one drawn instance and emit the waveform, filter and margins.
    Solve(RunArgs),
    /// Check a configuration file without running anything.
    Validate {
        #[command(flatten)]
        args: RunArgs,
        /// Print the resolved configuration as TOML.
        #[arg(long)]
        dump: bool,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Configuration file (TOML). Defaults are used when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Methods to run (repeatable or comma separated): sq, sdr, sca.
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    #[arg(long)]
    n_tx: Option<usize>,
    #[arg(long)]
    n_rx: Option<usize>,
    #[arg(long)]
    users: Option<usize>,
    /// Operating SNR target in dB.
    #[arg(long)]
    gamma_db: Option<f64>,
    #[arg(long)]
    channel_draws: Option<usize>,
    #[arg(long)]
    symbol_draws: Option<usize>,
    #[arg(long)]
    noise_trials: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            output_dir: self.out.clone(),
            methods: (!self.method.is_empty()).then(|| self.method.clone()),
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            n_users: self.users,
            gamma_db: self.gamma_db,
            n_channel_draws: self.channel_draws,
            n_symbol_draws: self.symbol_draws,
            noise_trials: self.noise_trials,
        }
    }

    fn resolve(&self) -> Result<ConfigFile, DfrcError> {
        let mut cfg = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        cfg.apply(&self.overrides());
        cfg.to_spec()?;
        Ok(cfg)
    }
}

fn exit_code(e: &DfrcError) -> u8 {
    match e {
        DfrcError::Config(_) => 2,
        DfrcError::Infeasible { .. } => 3,
        DfrcError::Numeric { .. }
        | DfrcError::NotPositiveDefinite { .. }
        | DfrcError::Degenerate(_)
        | DfrcError::RandomizationFailed { .. }
        | DfrcError::Contract(_)
        | DfrcError::Dimension { .. } => 4,
        DfrcError::Io(_) => 1,
    }
}

fn run(command: Command, args: &RunArgs) -> Result<u8, DfrcError> {
    let cfg = args.resolve()?;
    let summary = harness::execute(command, &cfg)?;
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    if summary.failed_runs > 0 {
        eprintln!(
            "warning: {} of {} solver runs failed numerically",
            summary.failed_runs, summary.total_runs
        );
    }
    if summary.all_infeasible {
        eprintln!("error: every instance was infeasible; no data points were produced");
        return Ok(3);
    }
    if summary.flagged_points > 0 {
        eprintln!(
            "warning: {} point(s) had no successful draw and are left empty",
            summary.flagged_points
        );
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Tradeoff(a) => run(Command::Tradeoff, a),
        Cmd::Beampattern(a) => run(Command::Beampattern, a),
        Cmd::Security(a) => run(Command::Security, a),
        Cmd::Solve(a) => run(Command::Solve, a),
        Cmd::Validate { args, dump } => args.resolve().map(|cfg| {
            if *dump {
                print!("{}", cfg.to_toml_string());
            } else {
                println!("configuration is valid");
            }
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
