//! Monte Carlo BER sweeps and their CSV form.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;

use super::config::{Compressor, SimConfig};
use super::trial::{trial_seed, Scenario};
use crate::codec::CrReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "snr_db,compressor,l_u,trials,tx_bits,bit_errors,ber,ber_ci_low,ber_ci_high,cr,b_org,b_cmp,b_ovh,median_compress_us";

/// Wilson score interval for `k` successes in `n` draws at `z` standard deviations.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// 95% two-sided normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub compressor: Compressor,
    pub l_u: Option<usize>,
    pub trials: usize,
    pub tx_bits: u64,
    pub bit_errors: u64,
    pub user_bits: Vec<u64>,
    pub user_errors: Vec<u64>,
    pub report: CrReport,
    pub median_compress: Option<Duration>,
}

impl SweepPoint {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.tx_bits as f64
    }

    pub fn ber_ci(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.tx_bits, Z95)
    }

    pub fn user_ber(&self) -> Vec<f64> {
        self.user_errors
            .iter()
            .zip(&self.user_bits)
            .map(|(&e, &n)| e as f64 / n as f64)
            .collect()
    }

    fn csv_row(&self) -> String {
        let (lo, hi) = self.ber_ci();
        format!(
            "{},{},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.4},{},{},{},{}",
            self.snr_db,
            self.compressor,
            self.l_u.map(|l| l.to_string()).unwrap_or_default(),
            self.trials,
            self.tx_bits,
            self.bit_errors,
            self.ber(),
            lo,
            hi,
            self.report.cr,
            self.report.b_org,
            self.report.b_cmp,
            self.report.b_ovh,
            self.median_compress
                .map(|d| format!("{:.1}", d.as_secs_f64() * 1e6))
                .unwrap_or_default(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by SNR, then by the configured compressor order.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn point(&self, snr_db: f64, compressor: Compressor) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.snr_db == snr_db && p.compressor == compressor)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(out, "{}", p.csv_row());
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

struct TrialCounts {
    errors: Vec<Vec<u64>>,
    bits: Vec<u64>,
    times: Vec<Duration>,
}

/// Runs every (SNR, trial, compressor) combination of `cfg`.
///
/// Trials run on `threads` worker threads (0 = rayon default). Counts are
/// summed as integers in a fixed order, so the result does not depend on the
/// thread count.
pub fn run_sweep(cfg: &SimConfig, threads: usize) -> Result<SweepResult> {
    let scenario = Scenario::new(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let jobs: Vec<(usize, usize)> = (0..cfg.snr_db.len())
        .flat_map(|s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let counts: Vec<TrialCounts> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, t)| {
                let seed = trial_seed(cfg.seed, t);
                let snr = cfg.snr_db[s];
                let run = || -> Result<TrialCounts> {
                    let tx = scenario.transmit(snr, seed)?;
                    let bits = tx.tx_bits.iter().map(|b| b.len() as u64).collect();
                    let mut errors = Vec::with_capacity(cfg.compressors.len());
                    let mut times = Vec::with_capacity(cfg.compressors.len());
                    for &c in &cfg.compressors {
                        let rx = scenario.receive(&tx, c)?;
                        errors.push(
                            tx.tx_bits
                                .iter()
                                .zip(&rx.rx_bits)
                                .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count() as u64)
                                .collect(),
                        );
                        times.push(rx.compress_time);
                    }
                    Ok(TrialCounts { errors, bits, times })
                };
                run().map_err(|e| Error::Trial { seed, source: Box::new(e) })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let n_u = cfg.n_users();
    let mut points = Vec::with_capacity(cfg.snr_db.len() * cfg.compressors.len());
    for (s, &snr) in cfg.snr_db.iter().enumerate() {
        let block = &counts[s * cfg.trials..(s + 1) * cfg.trials];
        for (ci, &c) in cfg.compressors.iter().enumerate() {
            let mut user_errors = vec![0u64; n_u];
            let mut user_bits = vec![0u64; n_u];
            let mut times = Vec::with_capacity(cfg.trials);
            for tc in block {
                for u in 0..n_u {
                    user_errors[u] += tc.errors[ci][u];
                    user_bits[u] += tc.bits[u];
                }
                times.push(tc.times[ci]);
            }
            times.sort();
            points.push(SweepPoint {
                snr_db: snr,
                compressor: c,
                l_u: scenario.rank_label(c),
                trials: cfg.trials,
                tx_bits: user_bits.iter().sum(),
                bit_errors: user_errors.iter().sum(),
                user_bits,
                user_errors,
                report: scenario.report(c)?,
                median_compress: cfg.record_timing.then(|| times[times.len() / 2]),
            });
        }
    }
    Ok(SweepResult { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // k = 0 upper bound is z² / (n + z²)
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert!(lo.abs() < 1e-15);
        assert!((hi - Z95 * Z95 / (100.0 + Z95 * Z95)).abs() < 1e-12);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!((lo - 0.403_831_7).abs() < 1e-6);
    }
}
