//! One Monte Carlo trial: transmit, fronthaul, combine, detect.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ChannelSpec, Compressor, SimConfig};
use crate::channel::{add_awgn, freq_response, generate_channel, propagate, ChannelRealization, NoiseSpec};
use crate::codec::{
    compress_svd_baseline, compression_ratio, decompress, decompress_svd, demap_users, dequantize, quantize,
    CompressedPayload, CrReport, QrCompressor, QuantizerSpec, SvdPayload,
};
use crate::error::{Error, Result};
use crate::linalg::{IQMatrix, C64};
use crate::phy::{qam_demodulate, qam_modulate, Ofdm, OfdmGrid, QamConfig, UserAllocation};

/// SplitMix64 finaliser.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial_idx` in a sweep with master seed `master`. The same
/// seed is used for every compressor and SNR point, so comparisons are paired.
pub fn trial_seed(master: u64, trial_idx: usize) -> u64 {
    mix_seed(master, trial_idx as u64)
}

/// Per-subcarrier zero-forcing combining of one user's `N_f_u × N_r` block.
///
/// `h[k]` is the user's `N_r` channel vector on subcarrier `k`; the estimate is
/// `h^H y / h^H h`.
pub fn equalize_zf(y_u: &IQMatrix, h: &[Vec<C64>]) -> Result<Vec<C64>> {
    if h.len() != y_u.rows() {
        return Err(Error::InvalidInput(format!(
            "{} channel vectors for {} subcarriers",
            h.len(),
            y_u.rows()
        )));
    }
    h.iter()
        .enumerate()
        .map(|(k, hk)| {
            if hk.len() != y_u.cols() {
                return Err(Error::InvalidInput(format!("channel vector {k} has {} antennas", hk.len())));
            }
            let energy: f64 = hk.iter().map(|z| z.norm_sqr()).sum();
            if energy == 0.0 {
                return Err(Error::Equalization { subcarrier: k });
            }
            let acc = hk
                .iter()
                .zip(y_u.row(k))
                .fold(C64::new(0.0, 0.0), |acc, (hv, yv)| acc + hv.conj() * yv);
            Ok(acc / energy)
        })
        .collect()
}

/// Transmitted data and the received block of one trial at one SNR.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub seed: u64,
    pub snr_db: f64,
    pub tx_bits: Vec<Vec<u8>>,
    pub channel: ChannelRealization,
    /// Noiseless received block, `N × N_r`.
    pub clean: IQMatrix,
    /// Received block with AWGN, `N × N_r`.
    pub y: IQMatrix,
}

/// Fronthaul output and detected bits for one compressor.
#[derive(Debug, Clone)]
pub struct Reception {
    pub compressor: Compressor,
    /// Per-user frequency-domain blocks seen by the baseband unit.
    pub user_blocks: Vec<IQMatrix>,
    pub rx_bits: Vec<Vec<u8>>,
    pub compress_time: Duration,
}

/// Per-user transmitted and detected bits of one trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub tx_bits: Vec<Vec<u8>>,
    pub rx_bits: Vec<Vec<u8>>,
    pub compress_time: Duration,
}

impl TrialOutcome {
    pub fn user_errors(&self) -> Vec<u64> {
        self.tx_bits
            .iter()
            .zip(&self.rx_bits)
            .map(|(t, r)| t.iter().zip(r).filter(|(a, b)| a != b).count() as u64)
            .collect()
    }

    pub fn bit_errors(&self) -> u64 {
        self.user_errors().iter().sum()
    }

    pub fn bit_count(&self) -> u64 {
        self.tx_bits.iter().map(|b| b.len() as u64).sum()
    }
}

/// Fixed per-run state: numerology, allocation, compressors and budgets.
#[derive(Debug, Clone)]
pub struct Scenario {
    cfg: SimConfig,
    qam: QamConfig,
    allocs: Vec<UserAllocation>,
    qr: QrCompressor,
    l_u: Vec<usize>,
    svd_rank: usize,
    quant: QuantizerSpec,
}

impl Scenario {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let allocs = cfg.allocations();
        let quant = QuantizerSpec::new(cfg.quant_bits)?;
        let rank = cfg.channel_rank();
        let qr = QrCompressor::new(cfg.ofdm, allocs.clone(), quant)?.with_rank_hint(rank).with_pivot(cfg.pivot);
        Ok(Self {
            qam: QamConfig::new(cfg.modulation)?,
            l_u: vec![cfg.resolved_l_u(); allocs.len()],
            svd_rank: cfg.resolved_svd_rank(),
            cfg: cfg.clone(),
            allocs,
            qr,
            quant,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn ofdm(&self) -> &Ofdm {
        self.qr.ofdm()
    }

    pub fn allocations(&self) -> &[UserAllocation] {
        &self.allocs
    }

    pub fn l_u(&self) -> &[usize] {
        &self.l_u
    }

    pub fn svd_rank(&self) -> usize {
        self.svd_rank
    }

    pub fn qr_compressor(&self) -> &QrCompressor {
        &self.qr
    }

    /// QR payload accounting; the SVD baseline gets the same bit budget.
    pub fn qr_report(&self) -> CrReport {
        let users: Vec<(usize, usize)> = self
            .allocs
            .iter()
            .zip(&self.l_u)
            .map(|(a, &l)| (a.n_subcarriers(), l))
            .collect();
        compression_ratio(self.cfg.ofdm.symbol_len(), self.cfg.n_r, self.quant.bits_per_sample(), &users)
    }

    pub fn svd_target_bits(&self) -> u64 {
        let r = self.qr_report();
        r.b_cmp + r.b_ovh
    }

    /// Accounting reported for `compressor`.
    pub fn report(&self, compressor: Compressor) -> Result<CrReport> {
        let b_org = self.cfg.ofdm.symbol_len() as u64 * self.cfg.n_r as u64 * self.quant.bits_per_sample() as u64;
        Ok(match compressor {
            Compressor::Qr => self.qr_report(),
            Compressor::None => CrReport { b_org, b_cmp: b_org, b_ovh: 0, cr: 1.0 },
            Compressor::SvdBaseline => {
                let n = self.cfg.ofdm.symbol_len();
                let b = crate::codec::svd_bits_per_component(self.svd_rank, n, self.cfg.n_r, self.svd_target_bits())?;
                let b_cmp = 2 * b as u64 * self.svd_rank as u64 * (n + self.cfg.n_r) as u64;
                CrReport { b_org, b_cmp, b_ovh: 0, cr: b_org as f64 / b_cmp as f64 }
            }
        })
    }

    /// Truncation rank reported for `compressor`.
    pub fn rank_label(&self, compressor: Compressor) -> Option<usize> {
        match compressor {
            Compressor::Qr => self.l_u.first().copied(),
            Compressor::SvdBaseline => Some(self.svd_rank),
            Compressor::None => None,
        }
    }

    fn channel(&self, seed: u64) -> Result<ChannelRealization> {
        let n_u = self.allocs.len();
        let mut ch = match &self.cfg.channel {
            ChannelSpec::Tdl(p) => generate_channel(p, n_u, self.cfg.n_r, self.cfg.rho, self.cfg.sample_rate_hz(), seed)?,
            ChannelSpec::Awgn => ChannelRealization::unit(self.cfg.n_r, n_u),
        };
        for u in 0..n_u {
            let amp = 10f64.powf(self.cfg.user_power_offset_db(u) / 20.0);
            ch.scale_user(u, amp);
        }
        Ok(ch)
    }

    /// Draws bits, channel and noise for trial `seed` at `snr_db`.
    ///
    /// Bits and channel depend only on `seed`; the noise also depends on the SNR.
    pub fn transmit(&self, snr_db: f64, seed: u64) -> Result<Transmission> {
        let ofdm = self.qr.ofdm();
        let mut bit_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
        let mut tx_bits = Vec::with_capacity(self.allocs.len());
        let mut streams = Vec::with_capacity(self.allocs.len());
        for a in &self.allocs {
            let bits: Vec<u8> = (0..a.n_subcarriers() * self.qam.bits_per_symbol())
                .map(|_| bit_rng.random_range(0..=1u8))
                .collect();
            let symbols = qam_modulate(&bits, &self.qam)?;
            let mut grid = OfdmGrid::zeros(ofdm.config());
            for (s, bin) in symbols.iter().zip(a.bins(ofdm.config())) {
                grid.bins[bin] = *s;
            }
            streams.push(ofdm.modulate(&grid)?);
            tx_bits.push(bits);
        }
        let channel = self.channel(mix_seed(seed, 2))?;
        let clean = propagate(&streams, &channel, self.cfg.ofdm.cp_len)?;
        let mut y = clean.clone();
        add_awgn(&mut y, &NoiseSpec::from_snr_db(snr_db), mix_seed(mix_seed(seed, 3), snr_db.to_bits()));
        Ok(Transmission { seed, snr_db, tx_bits, channel, clean, y })
    }

    /// Per-user frequency-domain blocks after the fronthaul.
    pub fn fronthaul(&self, y: &IQMatrix, compressor: Compressor) -> Result<(Vec<IQMatrix>, Duration)> {
        let ofdm = self.qr.ofdm();
        match compressor {
            Compressor::None => {
                let start = Instant::now();
                let q = quantize(y, self.quant)?;
                let elapsed = start.elapsed();
                Ok((demap_users(&dequantize(&q), &self.allocs, ofdm)?, elapsed))
            }
            Compressor::Qr => {
                let start = Instant::now();
                let payload = self.qr.compress(y, &self.l_u)?;
                let elapsed = start.elapsed();
                let payload = CompressedPayload::deserialize(&payload.serialize())?;
                Ok((decompress(&payload)?, elapsed))
            }
            Compressor::SvdBaseline => {
                let start = Instant::now();
                let payload = compress_svd_baseline(y, self.svd_rank, self.svd_target_bits(), ofdm.config())?;
                let elapsed = start.elapsed();
                let payload = SvdPayload::deserialize(&payload.serialize())?;
                Ok((demap_users(&decompress_svd(&payload), &self.allocs, ofdm)?, elapsed))
            }
        }
    }

    /// Fronthaul, combining and detection for one compressor.
    pub fn receive(&self, tx: &Transmission, compressor: Compressor) -> Result<Reception> {
        let (user_blocks, compress_time) = self.fronthaul(&tx.y, compressor)?;
        let n_fft = self.cfg.ofdm.n_fft;
        let rx_bits = self
            .allocs
            .iter()
            .zip(&user_blocks)
            .enumerate()
            .map(|(u, (a, y_u))| {
                let h: Vec<Vec<C64>> = freq_response(&tx.channel, &a.bins(&self.cfg.ofdm), n_fft)
                    .iter()
                    .map(|hk| hk.column(u))
                    .collect();
                let symbols = equalize_zf(y_u, &h)?;
                Ok(qam_demodulate(&symbols, &self.qam))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Reception { compressor, user_blocks, rx_bits, compress_time })
    }

    pub fn run_trial(&self, snr_db: f64, compressor: Compressor, seed: u64) -> Result<TrialOutcome> {
        let run = || {
            let tx = self.transmit(snr_db, seed)?;
            let rx = self.receive(&tx, compressor)?;
            Ok(TrialOutcome { tx_bits: tx.tx_bits, rx_bits: rx.rx_bits, compress_time: rx.compress_time })
        };
        run().map_err(|e| Error::Trial { seed, source: Box::new(e) })
    }

    /// Squared errors `(‖Y_u0 − S_u‖², ‖Y_u − S_u‖²)` summed over users, where
    /// `S_u` is the noiseless block and `Y_u0` the QR fronthaul output.
    pub fn denoising_errors(&self, snr_db: f64, seed: u64) -> Result<(f64, f64)> {
        let tx = self.transmit(snr_db, seed)?;
        let ofdm = self.qr.ofdm();
        let clean = demap_users(&tx.clean, &self.allocs, ofdm)?;
        let noisy = demap_users(&tx.y, &self.allocs, ofdm)?;
        let (approx, _) = self.fronthaul(&tx.y, Compressor::Qr)?;
        let mut err_qr = 0.0;
        let mut err_raw = 0.0;
        for ((s, y), y0) in clean.iter().zip(&noisy).zip(&approx) {
            err_qr += y0.sub(s)?.frobenius_norm().powi(2);
            err_raw += y.sub(s)?.frobenius_norm().powi(2);
        }
        Ok((err_qr, err_raw))
    }
}

/// One trial of `cfg` at `snr_db`; builds a [`Scenario`] on every call.
pub fn run_trial(cfg: &SimConfig, snr_db: f64, compressor: Compressor, seed: u64) -> Result<TrialOutcome> {
    Scenario::new(cfg)?.run_trial(snr_db, compressor, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zf_inverts_a_known_channel() {
        let h = vec![vec![C64::new(1.0, 1.0), C64::new(0.0, 2.0)], vec![C64::new(0.5, 0.0), C64::new(0.0, 0.0)]];
        let s = [C64::new(0.3, -0.7), C64::new(-1.0, 0.2)];
        let y = IQMatrix::from_fn(2, 2, |k, r| h[k][r] * s[k]);
        let est = equalize_zf(&y, &h).unwrap();
        for (e, s) in est.iter().zip(&s) {
            assert!((e - s).norm() < 1e-14);
        }
    }

    #[test]
    fn zf_rejects_zero_channel() {
        let h = vec![vec![C64::new(1.0, 0.0)], vec![C64::new(0.0, 0.0)]];
        let y = IQMatrix::zeros(2, 1);
        assert!(matches!(equalize_zf(&y, &h), Err(Error::Equalization { subcarrier: 1 })));
    }

    #[test]
    fn noiseless_trial_is_error_free() {
        let mut cfg = SimConfig::desk();
        cfg.n_r = 16;
        let s = Scenario::new(&cfg).unwrap();
        for c in [Compressor::None, Compressor::Qr] {
            let out = s.run_trial(60.0, c, 7).unwrap();
            assert_eq!(out.bit_errors(), 0, "{c}");
            assert_eq!(out.bit_count(), 4 * 96 * 6);
        }
    }

    #[test]
    fn seeds_differ_per_trial() {
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
        assert_eq!(trial_seed(5, 3), trial_seed(5, 3));
    }
}
