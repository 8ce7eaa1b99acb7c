//! Monte Carlo link simulation.
//!
//! A trial draws random bits for every user, maps them to QAM symbols on the
//! user's resource blocks, passes each user's OFDM symbol through an
//! independent channel realization, adds AWGN and hands the received block to
//! the fronthaul. The baseband side combines each subcarrier with
//! zero-forcing using the true channel and counts bit errors.

mod bench;
mod config;
mod sweep;
mod trial;

pub use bench::{analyze_cr, benchmark_compressors, BenchRow, CrRow};
pub use config::{allocate_rbs_paper, reference_rb_counts, ChannelSpec, Compressor, RankPolicy, SimConfig};
pub use sweep::{run_sweep, wilson_interval, SweepPoint, SweepResult, CSV_HEADER, Z95};
pub use trial::{
    equalize_zf, mix_seed, run_trial, trial_seed, Reception, Scenario, TrialOutcome, Transmission,
};
