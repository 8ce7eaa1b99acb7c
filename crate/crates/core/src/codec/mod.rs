//! Fronthaul codec.
//!
//! Remote radio head side: CP removal, FFT, resource-element demapping,
//! per-user norm-pivoted QR approximation, quantization, serialization.
//! Baseband unit side: dequantization and `Q·R` reconstruction per user.
//! The time-domain truncated-SVD compressor is provided as a baseline.

mod bits;
mod cr;
mod payload;
mod quant;

pub use bits::{BitReader, BitWriter};
pub use cr::{compression_ratio, CrReport};
pub use payload::{
    index_bits, CompressedPayload, PayloadHeader, SvdPayload, UserRecord, HEADER_BYTES, QR_MAGIC, SCALE_BITS,
    SVD_MAGIC, USER_PREFIX_BITS, VERSION,
};
pub use quant::{dequantize, quantize, QuantizedMatrix, QuantizerSpec};

use log::warn;

use crate::error::{invalid, Error, Result};
use crate::linalg::{pivoted_qr_with_rule, qr_reconstruct, truncated_svd, IQMatrix, PivotRule, QrFactors, C64};
use crate::phy::{validate_allocations, Ofdm, OfdmConfig, UserAllocation};

/// Splits a received time-domain block into per-user frequency-domain
/// matrices `Y_u` (`N_f_u × N_r`).
pub fn demap_users(y: &IQMatrix, allocs: &[UserAllocation], ofdm: &Ofdm) -> Result<Vec<IQMatrix>> {
    validate_allocations(allocs, ofdm.config())?;
    let y_f = ofdm.demodulate_columns(y)?;
    allocs.iter().map(|a| y_f.select_rows(&a.bins(ofdm.config()))).collect()
}

/// Split-C QR compressor for one numerology and allocation.
#[derive(Debug, Clone)]
pub struct QrCompressor {
    ofdm: Ofdm,
    allocs: Vec<UserAllocation>,
    quant: QuantizerSpec,
    pivot: PivotRule,
    rank_hint: Option<usize>,
}

impl QrCompressor {
    pub fn new(cfg: OfdmConfig, allocs: Vec<UserAllocation>, quant: QuantizerSpec) -> Result<Self> {
        validate_allocations(&allocs, &cfg)?;
        if allocs.iter().any(|a| a.user_id > u16::MAX as usize) {
            return Err(invalid("user id does not fit in 16 bits"));
        }
        Ok(Self {
            ofdm: Ofdm::new(cfg)?,
            allocs,
            quant,
            pivot: PivotRule::ColumnNorm,
            rank_hint: None,
        })
    }

    pub fn with_pivot(mut self, pivot: PivotRule) -> Self {
        self.pivot = pivot;
        self
    }

    /// Known signal rank per user; truncation below it is logged.
    pub fn with_rank_hint(mut self, rank: usize) -> Self {
        self.rank_hint = Some(rank);
        self
    }

    pub fn ofdm(&self) -> &Ofdm {
        &self.ofdm
    }

    pub fn allocations(&self) -> &[UserAllocation] {
        &self.allocs
    }

    fn check_ranks(&self, y: &IQMatrix, l_u: &[usize]) -> Result<()> {
        if l_u.len() != self.allocs.len() {
            return Err(invalid(format!("{} ranks for {} users", l_u.len(), self.allocs.len())));
        }
        let n_r = y.cols();
        for (a, &l) in self.allocs.iter().zip(l_u) {
            if l == 0 || l > n_r.min(a.n_subcarriers()) || l > u16::MAX as usize {
                return Err(invalid(format!(
                    "user {}: L_u = {l} outside 1..={}",
                    a.user_id,
                    n_r.min(a.n_subcarriers())
                )));
            }
            if let Some(rank) = self.rank_hint {
                if l < rank {
                    warn!("user {}: L_u = {l} is below the signal rank {rank}", a.user_id);
                }
            }
        }
        Ok(())
    }

    /// Unquantized per-user factors.
    pub fn factorize(&self, y: &IQMatrix, l_u: &[usize]) -> Result<Vec<QrFactors>> {
        self.check_ranks(y, l_u)?;
        let users = demap_users(y, &self.allocs, &self.ofdm)?;
        users
            .iter()
            .zip(l_u)
            .map(|(y_u, &l)| pivoted_qr_with_rule(y_u, l, self.pivot))
            .collect()
    }

    pub fn compress(&self, y: &IQMatrix, l_u: &[usize]) -> Result<CompressedPayload> {
        let factors = self.factorize(y, l_u)?;
        let cfg = self.ofdm.config();
        let users = factors
            .into_iter()
            .zip(&self.allocs)
            .map(|(f, a)| {
                Ok(UserRecord {
                    user_id: a.user_id as u16,
                    n_f_u: a.n_subcarriers() as u32,
                    l_u: f.l_u as u16,
                    q: quantize(&f.q, self.quant)?,
                    r: quantize(&f.r, self.quant)?,
                    perm: f.perm,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompressedPayload {
            header: PayloadHeader {
                n: cfg.symbol_len() as u32,
                n_r: y.cols() as u32,
                n_fft: cfg.n_fft as u32,
                cp_len: cfg.cp_len as u32,
                b_q: self.quant.bits_per_sample(),
                count: self.allocs.len() as u32,
            },
            users,
        })
    }
}

/// One-shot [`QrCompressor::compress`].
pub fn compress_qr(
    y: &IQMatrix,
    allocs: &[UserAllocation],
    l_u: &[usize],
    quant: QuantizerSpec,
    cfg: OfdmConfig,
) -> Result<CompressedPayload> {
    QrCompressor::new(cfg, allocs.to_vec(), quant)?.compress(y, l_u)
}

/// Per-user `Y_u0 = Q_u R_u` in original antenna order, in payload order.
pub fn decompress(p: &CompressedPayload) -> Result<Vec<IQMatrix>> {
    p.users
        .iter()
        .map(|u| {
            let f = QrFactors {
                q: dequantize(&u.q),
                r: dequantize(&u.r),
                perm: u.perm.clone(),
                l_u: u.l_u as usize,
            };
            qr_reconstruct(&f)
        })
        .collect()
}

/// Largest per-component width `b ≤ 16` with `k (N + N_r) · 2b ≤ target_bits`.
pub fn svd_bits_per_component(k: usize, n: usize, n_r: usize, target_bits: u64) -> Result<u32> {
    let per_bit = 2 * k as u64 * (n as u64 + n_r as u64);
    let b = (target_bits / per_bit).min(16) as u32;
    if b < 2 {
        return Err(Error::InfeasibleBudget { target_bits, rank: k });
    }
    Ok(b)
}

/// Rank-`k` SVD of the time-domain block, quantized to fit `target_bits`.
pub fn compress_svd_baseline(y: &IQMatrix, k: usize, target_bits: u64, cfg: &OfdmConfig) -> Result<SvdPayload> {
    if y.rows() != cfg.symbol_len() {
        return Err(invalid(format!("block has {} rows, expected {}", y.rows(), cfg.symbol_len())));
    }
    let b = svd_bits_per_component(k, y.rows(), y.cols(), target_bits)?;
    let spec = QuantizerSpec::new(b)?;
    let f = truncated_svd(y, k)?;
    let mut us = f.u.clone();
    for i in 0..us.rows() {
        for (z, s) in us.row_mut(i).iter_mut().zip(&f.s) {
            *z *= *s;
        }
    }
    Ok(SvdPayload {
        header: PayloadHeader {
            n: y.rows() as u32,
            n_r: y.cols() as u32,
            n_fft: cfg.n_fft as u32,
            cp_len: cfg.cp_len as u32,
            b_q: 2 * b,
            count: k as u32,
        },
        bits_per_component: b as u16,
        us: quantize(&us, spec)?,
        v: quantize(&f.v, spec)?,
    })
}

/// `Ŷ = (U·diag(s))·V^H`, time domain, `N × N_r`.
pub fn decompress_svd(p: &SvdPayload) -> IQMatrix {
    let us = dequantize(&p.us);
    let v = dequantize(&p.v);
    let (n, n_r, k) = (us.rows(), v.rows(), us.cols());
    let mut out = IQMatrix::zeros(n, n_r);
    for i in 0..n {
        let urow = us.row(i);
        let orow = out.row_mut(i);
        for (j, o) in orow.iter_mut().enumerate() {
            let vrow = v.row(j);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..k {
                acc += urow[t] * vrow[t].conj();
            }
            *o = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::pack_allocations;

    #[test]
    fn svd_budget_rule() {
        // full-scale numbers: k=96, N=4384, N_r=256 against the L_u=24 QR payload
        assert_eq!(svd_bits_per_component(96, 4384, 256, 3_771_904).unwrap(), 4);
        assert!(matches!(
            svd_bits_per_component(96, 4384, 256, 1_000_000),
            Err(Error::InfeasibleBudget { .. })
        ));
        assert_eq!(svd_bits_per_component(1, 10, 10, 1 << 30).unwrap(), 16);
    }

    #[test]
    fn rank_range_is_checked() {
        let cfg = OfdmConfig::centered(64, 8, 4).unwrap();
        let allocs = pack_allocations(&[1, 1]);
        let c = QrCompressor::new(cfg, allocs, QuantizerSpec::table1()).unwrap();
        let y = IQMatrix::zeros(72, 4);
        assert!(c.compress(&y, &[1]).is_err());
        assert!(c.compress(&y, &[0, 1]).is_err());
        assert!(c.compress(&y, &[5, 1]).is_err());
    }

    #[test]
    fn allocation_outside_grid_rejected() {
        let cfg = OfdmConfig::centered(64, 8, 4).unwrap();
        assert!(QrCompressor::new(cfg, pack_allocations(&[3, 2]), QuantizerSpec::table1()).is_err());
    }
}
