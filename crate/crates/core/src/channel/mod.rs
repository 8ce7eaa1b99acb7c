//! Spatially correlated tapped-delay-line Rayleigh channels and AWGN.
//!
//! Every tap carries an `N_r × N_u` gain matrix. Receive correlation follows
//! the exponential model `R[i][j] = ρ^|i−j|`, applied by left-multiplying
//! i.i.d. circular Gaussian gains with the Cholesky factor of `R`.

mod tdl;

pub use tdl::{tdla30_profile, TdlProfile};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{IQMatrix, C64};

/// One resolved multipath component.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTap {
    pub delay_samples: usize,
    /// `N_r × N_u` complex gains.
    pub gains: IQMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Sorted by strictly increasing delay.
    pub taps: Vec<ChannelTap>,
    pub rho: f64,
    pub sample_rate_hz: f64,
}

impl ChannelRealization {
    /// Single zero-delay tap with unit gain on every antenna (pure AWGN link).
    pub fn unit(n_r: usize, n_u: usize) -> Self {
        Self {
            taps: vec![ChannelTap {
                delay_samples: 0,
                gains: IQMatrix::from_fn(n_r, n_u, |_, _| C64::new(1.0, 0.0)),
            }],
            rho: 0.0,
            sample_rate_hz: 0.0,
        }
    }

    pub fn n_r(&self) -> usize {
        self.taps[0].gains.rows()
    }

    pub fn n_u(&self) -> usize {
        self.taps[0].gains.cols()
    }

    pub fn max_delay(&self) -> usize {
        self.taps.iter().map(|t| t.delay_samples).max().unwrap_or(0)
    }

    /// Multiplies every gain of user `u` by `amplitude` (per-user power offset).
    pub fn scale_user(&mut self, u: usize, amplitude: f64) {
        for tap in &mut self.taps {
            for r in 0..tap.gains.rows() {
                let g = tap.gains.get(r, u);
                tap.gains.set(r, u, g * amplitude);
            }
        }
    }
}

/// Complex AWGN with `variance` per sample, split equally between I and Q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub variance: f64,
}

impl NoiseSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(invalid(format!("noise variance {variance} must be finite and non-negative")));
        }
        Ok(Self { variance })
    }

    /// Variance giving `snr_db` for unit received symbol energy.
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self { variance: 10f64.powf(-snr_db / 10.0) }
    }

    pub fn snr_db(&self) -> f64 {
        -10.0 * self.variance.log10()
    }
}

/// Lower-triangular `L` with `L·L^T = R`, `R[i][j] = ρ^|i−j|`.
pub fn exp_correlation_sqrt(rho: f64, n_r: usize) -> Result<IQMatrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!("correlation coefficient {rho} outside [0, 1)")));
    }
    if n_r == 0 {
        return Err(invalid("need at least one antenna"));
    }
    let tail = (1.0 - rho * rho).sqrt();
    Ok(IQMatrix::from_fn(n_r, n_r, |i, j| {
        let v = match (i, j) {
            (i, j) if j > i => 0.0,
            (i, 0) => rho.powi(i as i32),
            (i, j) => rho.powi((i - j) as i32) * tail,
        };
        C64::new(v, 0.0)
    }))
}

pub(crate) fn complex_gaussian(rng: &mut ChaCha8Rng, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Draws one correlated Rayleigh realization of `profile`.
///
/// Delays are rounded to the nearest sample and taps landing on the same
/// sample are merged by adding their gains.
pub fn generate_channel(
    profile: &TdlProfile,
    n_u: usize,
    n_r: usize,
    rho: f64,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<ChannelRealization> {
    profile.validate()?;
    if n_u == 0 || n_r == 0 {
        return Err(invalid("channel needs at least one user and one antenna"));
    }
    let corr = exp_correlation_sqrt(rho, n_r)?;
    let powers = profile.normalized_powers();
    let delays = profile.delay_samples(sample_rate_hz);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut taps: Vec<ChannelTap> = Vec::new();
    for (&power, &delay) in powers.iter().zip(&delays) {
        let iid = IQMatrix::from_fn(n_r, n_u, |_, _| complex_gaussian(&mut rng, power));
        let gains = if rho == 0.0 { iid } else { corr.matmul(&iid)? };
        match taps.iter_mut().find(|t| t.delay_samples == delay) {
            Some(t) => t.gains = t.gains.add(&gains)?,
            None => taps.push(ChannelTap { delay_samples: delay, gains }),
        }
    }
    taps.sort_by_key(|t| t.delay_samples);
    Ok(ChannelRealization { taps, rho, sample_rate_hz })
}

/// Noiseless multipath output: column `r` is `Σ_u Σ_taps g[r,u]·x_u[n − d]`,
/// with the delay taken circularly over the CP-extended block.
pub fn propagate(x: &[Vec<C64>], ch: &ChannelRealization, cp_len: usize) -> Result<IQMatrix> {
    if x.len() != ch.n_u() {
        return Err(invalid(format!("{} user streams for a {}-user channel", x.len(), ch.n_u())));
    }
    let n = x.first().map_or(0, Vec::len);
    if n == 0 || x.iter().any(|s| s.len() != n) {
        return Err(invalid("user streams must be non-empty and of equal length"));
    }
    if let Some(t) = ch.taps.iter().find(|t| t.delay_samples >= cp_len.max(1)) {
        return Err(Error::Config(format!(
            "tap delay {} samples is not covered by a {cp_len}-sample cyclic prefix",
            t.delay_samples
        )));
    }
    let n_r = ch.n_r();
    let mut y = IQMatrix::zeros(n, n_r);
    for (u, xu) in x.iter().enumerate() {
        for tap in &ch.taps {
            let g: Vec<C64> = (0..n_r).map(|r| tap.gains.get(r, u)).collect();
            let d = tap.delay_samples;
            for t in 0..n {
                let s = xu[(t + n - d) % n];
                if s == C64::new(0.0, 0.0) {
                    continue;
                }
                for (yv, gv) in y.row_mut(t).iter_mut().zip(&g) {
                    *yv += gv * s;
                }
            }
        }
    }
    Ok(y)
}

/// Adds complex white Gaussian noise in place.
pub fn add_awgn(y: &mut IQMatrix, noise: &NoiseSpec, seed: u64) {
    if noise.variance == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for z in y.data_mut() {
        *z += complex_gaussian(&mut rng, noise.variance);
    }
}

/// Received block `Y` (`N × N_r`): multipath propagation plus AWGN.
pub fn apply_channel(
    x: &[Vec<C64>],
    ch: &ChannelRealization,
    cp_len: usize,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<IQMatrix> {
    let mut y = propagate(x, ch, cp_len)?;
    add_awgn(&mut y, noise, seed);
    Ok(y)
}

/// `H(f)[r,u] = Σ_i g_i[r,u]·exp(−j2π·f·d_i/n_fft)` for each FFT bin `f`.
pub fn freq_response(ch: &ChannelRealization, bins: &[usize], n_fft: usize) -> Vec<IQMatrix> {
    let (n_r, n_u) = (ch.n_r(), ch.n_u());
    bins.iter()
        .map(|&f| {
            let mut h = IQMatrix::zeros(n_r, n_u);
            for tap in &ch.taps {
                let phase = -2.0 * std::f64::consts::PI * ((f * tap.delay_samples) % n_fft) as f64 / n_fft as f64;
                let w = C64::from_polar(1.0, phase);
                for (hv, gv) in h.data_mut().iter_mut().zip(tap.gains.data()) {
                    *hv += gv * w;
                }
            }
            h
        })
        .collect()
}
