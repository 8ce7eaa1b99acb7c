//! OFDM numerology, resource-block allocation and the CP-OFDM transform pair.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::linalg::{IQMatrix, C64};

pub const SUBCARRIERS_PER_RB: usize = 12;

/// FFT size, cyclic prefix and the placement of the active band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OfdmConfig {
    pub n_fft: usize,
    pub cp_len: usize,
    /// Number of resource blocks in the carrier.
    pub n_rb_max: usize,
    /// Signed frequency index (relative to DC) of active subcarrier 0.
    pub first_subcarrier: i64,
}

impl OfdmConfig {
    /// Active band centred on DC, DC counted as an active subcarrier.
    pub fn centered(n_fft: usize, cp_len: usize, n_rb_max: usize) -> Result<Self> {
        let n_active = n_rb_max * SUBCARRIERS_PER_RB;
        let cfg = Self {
            n_fft,
            cp_len,
            n_rb_max,
            first_subcarrier: -((n_active / 2) as i64),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 100 MHz carrier at 30 kHz spacing: 4096-point FFT, 288-sample CP, 273 RBs.
    pub fn table1() -> Self {
        Self::centered(4096, 288, 273).expect("valid numerology")
    }

    /// Reduced numerology used for quick runs: 512-point FFT, 36-sample CP
    /// (same CP duration at 30 kHz), 38 RBs.
    pub fn desk() -> Self {
        Self::centered(512, 36, 38).expect("valid numerology")
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_fft.is_power_of_two() {
            return Err(invalid(format!("FFT size {} is not a power of two", self.n_fft)));
        }
        if self.cp_len >= self.n_fft {
            return Err(invalid(format!("CP length {} must be below FFT size {}", self.cp_len, self.n_fft)));
        }
        let n_active = self.n_active();
        if n_active == 0 || n_active >= self.n_fft {
            return Err(invalid(format!("{n_active} active subcarriers do not fit a {}-point FFT", self.n_fft)));
        }
        let half = (self.n_fft / 2) as i64;
        let last = self.first_subcarrier + n_active as i64 - 1;
        if self.first_subcarrier < -half || last >= half {
            return Err(invalid("active band extends past Nyquist"));
        }
        Ok(())
    }

    pub fn n_active(&self) -> usize {
        self.n_rb_max * SUBCARRIERS_PER_RB
    }

    /// Samples per CP-extended symbol.
    pub fn symbol_len(&self) -> usize {
        self.n_fft + self.cp_len
    }

    /// FFT bin carrying active subcarrier `k`.
    pub fn bin(&self, k: usize) -> usize {
        (self.first_subcarrier + k as i64).rem_euclid(self.n_fft as i64) as usize
    }
}

/// Contiguous block of resource blocks owned by one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserAllocation {
    pub user_id: usize,
    pub rb_start: usize,
    pub rb_count: usize,
}

impl UserAllocation {
    pub fn n_subcarriers(&self) -> usize {
        self.rb_count * SUBCARRIERS_PER_RB
    }

    /// Active-subcarrier indices (not FFT bins).
    pub fn subcarriers(&self) -> std::ops::Range<usize> {
        let start = self.rb_start * SUBCARRIERS_PER_RB;
        start..start + self.n_subcarriers()
    }

    /// FFT bins for this user under `cfg`.
    pub fn bins(&self, cfg: &OfdmConfig) -> Vec<usize> {
        self.subcarriers().map(|k| cfg.bin(k)).collect()
    }
}

/// Packs allocations back to back from RB 0, in the given order.
pub fn pack_allocations(rb_counts: &[usize]) -> Vec<UserAllocation> {
    let mut start = 0;
    rb_counts
        .iter()
        .enumerate()
        .map(|(user_id, &rb_count)| {
            let a = UserAllocation { user_id, rb_start: start, rb_count };
            start += rb_count;
            a
        })
        .collect()
}

pub fn validate_allocations(allocs: &[UserAllocation], cfg: &OfdmConfig) -> Result<()> {
    let mut owner = vec![None::<usize>; cfg.n_rb_max];
    for a in allocs {
        if a.rb_count == 0 {
            return Err(invalid(format!("user {} has no resource blocks", a.user_id)));
        }
        if a.rb_start + a.rb_count > cfg.n_rb_max {
            return Err(invalid(format!(
                "user {} allocation RB {}..{} exceeds the {}-RB grid",
                a.user_id,
                a.rb_start,
                a.rb_start + a.rb_count,
                cfg.n_rb_max
            )));
        }
        for (rb, slot) in owner.iter_mut().enumerate().skip(a.rb_start).take(a.rb_count) {
            if let Some(other) = *slot {
                return Err(invalid(format!("RB {rb} allocated to users {other} and {}", a.user_id)));
            }
            *slot = Some(a.user_id);
        }
    }
    Ok(())
}

/// Frequency-domain content of one OFDM symbol, indexed by FFT bin.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmGrid {
    pub bins: Vec<C64>,
}

impl OfdmGrid {
    pub fn zeros(cfg: &OfdmConfig) -> Self {
        Self { bins: vec![C64::new(0.0, 0.0); cfg.n_fft] }
    }

    pub fn energy(&self) -> f64 {
        self.bins.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Places each user's symbols on its subcarriers; every other bin stays zero.
pub fn map_subcarriers(user_symbols: &[Vec<C64>], allocs: &[UserAllocation], cfg: &OfdmConfig) -> Result<OfdmGrid> {
    if user_symbols.len() != allocs.len() {
        return Err(invalid(format!(
            "{} symbol streams for {} allocations",
            user_symbols.len(),
            allocs.len()
        )));
    }
    validate_allocations(allocs, cfg)?;
    let mut grid = OfdmGrid::zeros(cfg);
    for (syms, a) in user_symbols.iter().zip(allocs) {
        if syms.len() != a.n_subcarriers() {
            return Err(invalid(format!(
                "user {} has {} symbols for {} subcarriers",
                a.user_id,
                syms.len(),
                a.n_subcarriers()
            )));
        }
        for (s, bin) in syms.iter().zip(a.bins(cfg)) {
            grid.bins[bin] = *s;
        }
    }
    Ok(grid)
}

/// Inverse of [`map_subcarriers`].
pub fn demap_subcarriers(grid: &OfdmGrid, allocs: &[UserAllocation], cfg: &OfdmConfig) -> Vec<Vec<C64>> {
    allocs
        .iter()
        .map(|a| a.bins(cfg).into_iter().map(|b| grid.bins[b]).collect())
        .collect()
}

/// Planned unitary FFT pair for one numerology.
#[derive(Clone)]
pub struct Ofdm {
    cfg: OfdmConfig,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Ofdm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ofdm").field("cfg", &self.cfg).finish()
    }
}

impl Ofdm {
    pub fn new(cfg: OfdmConfig) -> Result<Self> {
        cfg.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            forward: planner.plan_fft_forward(cfg.n_fft),
            inverse: planner.plan_fft_inverse(cfg.n_fft),
            scale: 1.0 / (cfg.n_fft as f64).sqrt(),
            cfg,
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    /// IFFT then CP insertion.
    pub fn modulate(&self, grid: &OfdmGrid) -> Result<Vec<C64>> {
        if grid.bins.len() != self.cfg.n_fft {
            return Err(invalid(format!("grid has {} bins, expected {}", grid.bins.len(), self.cfg.n_fft)));
        }
        let mut body = grid.bins.clone();
        self.inverse.process(&mut body);
        body.iter_mut().for_each(|z| *z *= self.scale);
        let mut out = Vec::with_capacity(self.cfg.symbol_len());
        out.extend_from_slice(&body[self.cfg.n_fft - self.cfg.cp_len..]);
        out.extend_from_slice(&body);
        Ok(out)
    }

    /// CP removal then FFT.
    pub fn demodulate(&self, time: &[C64]) -> Result<OfdmGrid> {
        if time.len() != self.cfg.symbol_len() {
            return Err(invalid(format!(
                "time block has {} samples, expected {}",
                time.len(),
                self.cfg.symbol_len()
            )));
        }
        let mut bins = time[self.cfg.cp_len..].to_vec();
        self.forward.process(&mut bins);
        bins.iter_mut().for_each(|z| *z *= self.scale);
        Ok(OfdmGrid { bins })
    }

    /// Demodulates every antenna column of a `symbol_len × N_r` block into an
    /// `n_fft × N_r` frequency-domain matrix.
    pub fn demodulate_columns(&self, y: &IQMatrix) -> Result<IQMatrix> {
        if y.rows() != self.cfg.symbol_len() {
            return Err(invalid(format!(
                "received block has {} rows, expected {}",
                y.rows(),
                self.cfg.symbol_len()
            )));
        }
        let n_r = y.cols();
        let mut out = IQMatrix::zeros(self.cfg.n_fft, n_r);
        let mut buf = vec![C64::new(0.0, 0.0); self.cfg.n_fft];
        let mut scratch = vec![C64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for r in 0..n_r {
            for (n, b) in buf.iter_mut().enumerate() {
                *b = y.get(self.cfg.cp_len + n, r);
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            for (f, b) in buf.iter().enumerate() {
                out.set(f, r, b * self.scale);
            }
        }
        Ok(out)
    }
}

pub fn ofdm_modulate(grid: &OfdmGrid, cfg: &OfdmConfig) -> Result<Vec<C64>> {
    Ofdm::new(*cfg)?.modulate(grid)
}

pub fn ofdm_demodulate(time: &[C64], cfg: &OfdmConfig) -> Result<OfdmGrid> {
    Ofdm::new(*cfg)?.demodulate(time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small() -> OfdmConfig {
        OfdmConfig::centered(64, 8, 4).unwrap()
    }

    #[test]
    fn table1_numerology() {
        let cfg = OfdmConfig::table1();
        assert_eq!(cfg.symbol_len(), 4384);
        assert_eq!(cfg.n_active(), 3276);
        // active band indices are distinct bins
        let mut bins: Vec<usize> = (0..cfg.n_active()).map(|k| cfg.bin(k)).collect();
        bins.sort_unstable();
        bins.dedup();
        assert_eq!(bins.len(), 3276);
    }

    #[test]
    fn config_validation() {
        assert!(OfdmConfig::centered(100, 8, 4).is_err());
        assert!(OfdmConfig::centered(64, 64, 4).is_err());
        assert!(OfdmConfig::centered(64, 8, 6).is_err());
    }

    #[test]
    fn single_rb_has_twelve_nonzero_bins() {
        let cfg = small();
        let alloc = [UserAllocation { user_id: 0, rb_start: 1, rb_count: 1 }];
        let syms = vec![vec![C64::new(1.0, -1.0); 12]];
        let grid = map_subcarriers(&syms, &alloc, &cfg).unwrap();
        assert_eq!(grid.bins.iter().filter(|z| z.norm() > 0.0).count(), 12);
        assert_eq!(demap_subcarriers(&grid, &alloc, &cfg), syms);
    }

    #[test]
    fn two_users_trace_to_owner() {
        let cfg = small();
        let allocs = pack_allocations(&[1, 2]);
        let syms = vec![vec![C64::new(1.0, 0.0); 12], vec![C64::new(2.0, 0.0); 24]];
        let grid = map_subcarriers(&syms, &allocs, &cfg).unwrap();
        // brute-force ownership via the index sets
        for (bin, v) in grid.bins.iter().enumerate() {
            let owners: Vec<usize> = allocs
                .iter()
                .filter(|a| a.bins(&cfg).contains(&bin))
                .map(|a| a.user_id)
                .collect();
            match owners.as_slice() {
                [] => assert_eq!(*v, C64::new(0.0, 0.0)),
                [u] => assert_eq!(v.re, (*u + 1) as f64),
                _ => panic!("bin {bin} owned twice"),
            }
        }
    }

    #[test]
    fn allocation_errors() {
        let cfg = small();
        let overlap = [
            UserAllocation { user_id: 0, rb_start: 0, rb_count: 2 },
            UserAllocation { user_id: 1, rb_start: 1, rb_count: 1 },
        ];
        assert!(validate_allocations(&overlap, &cfg).is_err());
        let too_big = [UserAllocation { user_id: 0, rb_start: 3, rb_count: 2 }];
        assert!(validate_allocations(&too_big, &cfg).is_err());
        let allocs = pack_allocations(&[1]);
        assert!(map_subcarriers(&[vec![C64::new(0.0, 0.0); 11]], &allocs, &cfg).is_err());
    }

    #[test]
    fn zero_grid_gives_zero_signal() {
        let cfg = small();
        let t = ofdm_modulate(&OfdmGrid::zeros(&cfg), &cfg).unwrap();
        assert_eq!(t.len(), 72);
        assert!(t.iter().all(|z| *z == C64::new(0.0, 0.0)));
        let g = ofdm_demodulate(&t, &cfg).unwrap();
        assert!(g.bins.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn cyclic_prefix_is_tail_copy() {
        let cfg = small();
        let mut grid = OfdmGrid::zeros(&cfg);
        for (i, b) in grid.bins.iter_mut().enumerate() {
            *b = C64::new((i as f64).sin(), (i as f64 * 0.7).cos());
        }
        let t = ofdm_modulate(&grid, &cfg).unwrap();
        assert_eq!(&t[..8], &t[64..72]);
    }

    #[test]
    fn single_tone_matches_direct_sum() {
        let cfg = small();
        let k = 5;
        let mut grid = OfdmGrid::zeros(&cfg);
        grid.bins[k] = C64::new(0.5, 0.25);
        let t = ofdm_modulate(&grid, &cfg).unwrap();
        for (m, z) in t.iter().enumerate() {
            // sample m of the CP-extended symbol is body sample (m - cp) mod n_fft
            let n = (m + 64 - 8) % 64;
            let expect = grid.bins[k] * C64::from_polar(1.0, 2.0 * PI * (k * n) as f64 / 64.0) / 8.0;
            assert!((z - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let cfg = small();
        assert!(ofdm_demodulate(&vec![C64::new(0.0, 0.0); 64], &cfg).is_err());
        let grid = OfdmGrid { bins: vec![C64::new(0.0, 0.0); 32] };
        assert!(ofdm_modulate(&grid, &cfg).is_err());
    }
}
