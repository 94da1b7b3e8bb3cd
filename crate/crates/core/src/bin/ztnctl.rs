use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ztn_loop::pipeline::{Artifacts, ExperimentConfig};
use ztn_loop::Result;

#[derive(Parser)]
#[command(name = "ztnctl", version, about = "Closed-loop congestion control experiment driver")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; omitted keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate train.csv and test.csv from the simulator.
    Simulate,
    /// Fit the BiLSTM and the residual booster.
    Train,
    /// Learn the Q-table from the forecaster's test-set states.
    TrainAgent,
    /// Drive the live simulator with the trained artifacts.
    RunLoop {
        #[arg(long)]
        timestamps: Option<usize>,
        /// Apply the action chosen for the observed state instead of the forecast one.
        #[arg(long)]
        reactive: bool,
    },
    /// Summarise agent convergence from agent_trace.csv.
    Report,
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    if let Cmd::RunLoop { timestamps, reactive } = &cli.cmd {
        if let Some(t) = timestamps {
            cfg.run_loop.timestamps = *t;
        }
        cfg.run_loop.reactive |= *reactive;
    }
    cfg.validate()?;
    let a = Artifacts::new(&cli.common.out);
    match cli.cmd {
        Cmd::Simulate => {
            let (train, test) = a.simulate(&cfg)?;
            println!("wrote {} train and {} test samples to {}", train.len(), test.len(), a.dir.display());
        }
        Cmd::Train => print!("{}", a.train(&cfg)?.to_text()),
        Cmd::TrainAgent => {
            let (q, trace) = a.train_agent(&cfg)?;
            let last = trace.records.last().map_or(f64::NAN, |r| r.mae);
            println!(
                "trained {}x{} Q-table over {} episodes, final MAE {last:.4}",
                q.num_states(),
                q.num_actions(),
                trace.records.len()
            );
        }
        Cmd::RunLoop { .. } => print!("{}", a.run_loop(&cfg)?.summary.to_text()),
        Cmd::Report => print!("{}", a.report()?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ztnctl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
