use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use qrfh::sim::{analyze_cr, benchmark_compressors, run_sweep, SimConfig};

#[derive(Parser)]
#[command(name = "qrfh", version, about = "Massive-MIMO uplink simulator with QR fronthaul compression")]
struct Cli {
    /// Start from the 256-antenna, 4096-point FFT defaults instead of the desk scenario.
    #[arg(long, global = true)]
    full_scale: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER sweep; writes CSV.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads, 0 for one per core.
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        /// Overrides the trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Compression-ratio table for the configured allocation.
    AnalyzeCr {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Median compression time per call.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(config: Option<&PathBuf>, full_scale: bool) -> qrfh::Result<SimConfig> {
    match config {
        Some(path) => SimConfig::load(path, full_scale),
        None if full_scale => Ok(SimConfig::full_scale()),
        None => Ok(SimConfig::desk()),
    }
}

fn run(cli: Cli) -> qrfh::Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed, parallel, trials } => {
            let mut cfg = load(config.as_ref(), cli.full_scale)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.validate()?;
            info!(
                "{} users, N_r = {}, channel rank {}, L_u = {}, {} trials x {} SNR points",
                cfg.n_users(),
                cfg.n_r,
                cfg.channel_rank(),
                cfg.resolved_l_u(),
                cfg.trials,
                cfg.snr_db.len()
            );
            let result = run_sweep(&cfg, parallel)?;
            match out {
                Some(path) => {
                    result.write_csv(&path)?;
                    info!("wrote {}", path.display());
                }
                None => print!("{}", result.to_csv()),
            }
        }
        Command::AnalyzeCr { config } => {
            let cfg = load(config.as_ref(), cli.full_scale)?;
            println!("users,l_u,b_org,b_cmp,b_ovh,cr");
            for row in analyze_cr(&cfg) {
                let r = row.report;
                println!("{},{},{},{},{},{:.3}", row.users, row.l_u, r.b_org, r.b_cmp, r.b_ovh, r.cr);
            }
        }
        Command::Bench { config } => {
            let cfg = load(config.as_ref(), cli.full_scale)?;
            println!("method,rows,n_r,rank,runs,median_us");
            for row in benchmark_compressors(&cfg)? {
                println!(
                    "{},{},{},{},{},{:.1}",
                    row.method,
                    row.n_rows,
                    row.n_r,
                    row.rank,
                    row.runs,
                    row.median_us()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
