//! Compressor timing and compression-ratio tables.

use std::time::{Duration, Instant};

use super::config::SimConfig;
use super::trial::{trial_seed, Scenario};
use crate::codec::{compress_svd_baseline, compression_ratio, quantize, CrReport, QuantizerSpec};
use crate::error::{invalid, Result};
use crate::linalg::pivoted_qr_approx;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    /// `qr-user`, `qr-symbol` or `svd-symbol`.
    pub method: &'static str,
    pub n_rows: usize,
    pub n_r: usize,
    pub rank: usize,
    pub runs: usize,
    pub median: Duration,
}

impl BenchRow {
    pub fn median_us(&self) -> f64 {
        self.median.as_secs_f64() * 1e6
    }
}

fn median_time(runs: usize, mut f: impl FnMut() -> Result<()>) -> Result<Duration> {
    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs.max(1) {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed());
    }
    times.sort();
    Ok(times[times.len() / 2])
}

/// Median wall-clock compression time over `cfg.bench_runs` calls.
///
/// `qr-user` rows time pivoted QR plus quantization of one `N_f × N_r` user
/// block for every (`bench_n_f`, `bench_l_u`) pair; the `qr-symbol` row
/// compresses the whole received symbol (FFT included) for all users, and
/// `svd-symbol` runs the SVD baseline on the same symbol.
pub fn benchmark_compressors(cfg: &SimConfig) -> Result<Vec<BenchRow>> {
    let scenario = Scenario::new(cfg)?;
    let snr = cfg.snr_db[cfg.snr_db.len() / 2];
    let tx = scenario.transmit(snr, trial_seed(cfg.seed, 0))?;
    let y_f = scenario.ofdm().demodulate_columns(&tx.y)?;
    let active: Vec<usize> = (0..cfg.ofdm.n_active()).map(|k| cfg.ofdm.bin(k)).collect();
    let quant = QuantizerSpec::new(cfg.quant_bits)?;
    let runs = cfg.bench_runs;

    let mut rows = Vec::new();
    for &n_f in &cfg.bench_n_f {
        if n_f == 0 || n_f > active.len() {
            return Err(invalid(format!("bench_n_f {n_f} outside 1..={}", active.len())));
        }
        let y_u = y_f.select_rows(&active[..n_f])?;
        for &l in &cfg.bench_l_u {
            let median = median_time(runs, || {
                let f = pivoted_qr_approx(&y_u, l)?;
                quantize(&f.q, quant)?;
                quantize(&f.r, quant)?;
                Ok(())
            })?;
            rows.push(BenchRow { method: "qr-user", n_rows: n_f, n_r: cfg.n_r, rank: l, runs, median });
        }
    }

    let qr = scenario.qr_compressor();
    let median = median_time(runs, || qr.compress(&tx.y, scenario.l_u()).map(|_| ()))?;
    rows.push(BenchRow {
        method: "qr-symbol",
        n_rows: cfg.ofdm.symbol_len(),
        n_r: cfg.n_r,
        rank: scenario.l_u()[0],
        runs,
        median,
    });

    let k = scenario.svd_rank();
    let target = scenario.svd_target_bits();
    let median = median_time(runs, || compress_svd_baseline(&tx.y, k, target, &cfg.ofdm).map(|_| ()))?;
    rows.push(BenchRow { method: "svd-symbol", n_rows: cfg.ofdm.symbol_len(), n_r: cfg.n_r, rank: k, runs, median });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrRow {
    pub l_u: usize,
    pub users: usize,
    pub report: CrReport,
}

/// Compression ratio of `cfg`'s allocation for every `cr_l_u` value.
pub fn analyze_cr(cfg: &SimConfig) -> Vec<CrRow> {
    let b_q = 2 * cfg.quant_bits;
    cfg.cr_l_u
        .iter()
        .map(|&l| {
            let users: Vec<(usize, usize)> = cfg.rb_allocation.iter().map(|&rb| (12 * rb, l)).collect();
            CrRow {
                l_u: l,
                users: users.len(),
                report: compression_ratio(cfg.ofdm.symbol_len(), cfg.n_r, b_q, &users),
            }
        })
        .collect()
}
