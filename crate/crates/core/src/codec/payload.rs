//! Bit-exact fronthaul payloads.
//!
//! QR payload layout (`QRFH`):
//!
//! ```text
//! magic "QRFH" | version u16 | N u32 | N_r u32 | N_fft u32 | cp_len u32 | b_Q u32 | N_u u32
//! per user (starts byte-aligned, zero-padded to a byte boundary at the end):
//!   user_id u16 | N_f_u u32 | L_u u16
//!   N_r antenna indices, ceil(log2 N_r) bits each
//!   Q scale, R scale: IEEE-754 binary32 bit patterns, 32 bits each
//!   Q codes (N_f_u × L_u), then R codes (L_u × N_r): row-major, real then
//!   imaginary, two's complement at b_Q/2 bits
//! ```
//!
//! Integers in the fixed header and the per-user prefix are little-endian;
//! everything after the per-user prefix is packed MSB-first.
//!
//! The SVD baseline payload (`SVFH`) has the same fixed header with `rank`
//! in place of `N_u`, then `b` (u16, bits per component), the two scales
//! and the codes of `U·diag(s)` (N × k) and `V` (N_r × k).

use super::bits::{BitReader, BitWriter};
use super::quant::{QuantizedMatrix, QuantizerSpec};
use crate::error::{Error, Result};
use crate::linalg::qr::check_permutation;

pub const QR_MAGIC: [u8; 4] = *b"QRFH";
pub const SVD_MAGIC: [u8; 4] = *b"SVFH";
pub const VERSION: u16 = 1;
/// Magic, version and six u32 fields.
pub const HEADER_BYTES: usize = 4 + 2 + 6 * 4;
/// user_id u16, N_f_u u32, L_u u16.
pub const USER_PREFIX_BITS: u64 = 64;
/// Two binary32 scale factors.
pub const SCALE_BITS: u64 = 64;

/// Bits needed for one antenna index.
pub fn index_bits(n_r: usize) -> u32 {
    if n_r <= 1 {
        0
    } else {
        usize::BITS - (n_r - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayloadHeader {
    /// Time samples per block (FFT size plus CP).
    pub n: u32,
    pub n_r: u32,
    pub n_fft: u32,
    pub cp_len: u32,
    /// Bits per complex sample.
    pub b_q: u32,
    /// User count (QR) or retained rank (SVD).
    pub count: u32,
}

impl PayloadHeader {
    fn write(&self, magic: [u8; 4], w: &mut BitWriter) {
        w.write_bytes(&magic);
        w.write_bytes(&VERSION.to_le_bytes());
        for v in [self.n, self.n_r, self.n_fft, self.cp_len, self.b_q, self.count] {
            w.write_bytes(&v.to_le_bytes());
        }
    }

    fn read(magic: [u8; 4], r: &mut BitReader<'_>) -> Result<Self> {
        let got = r.read_bytes(4)?;
        if got != magic {
            return Err(Error::Decode {
                offset: 0,
                reason: format!("bad magic {:?}, expected {:?}", got, std::str::from_utf8(&magic).unwrap_or("?")),
            });
        }
        let version = r.read_u16_le()?;
        if version != VERSION {
            return Err(Error::Decode {
                offset: 4,
                reason: format!("unsupported version {version}"),
            });
        }
        let h = Self {
            n: r.read_u32_le()?,
            n_r: r.read_u32_le()?,
            n_fft: r.read_u32_le()?,
            cp_len: r.read_u32_le()?,
            b_q: r.read_u32_le()?,
            count: r.read_u32_le()?,
        };
        if h.n_r == 0 || h.n == 0 || !h.b_q.is_multiple_of(2) || !(4..=32).contains(&h.b_q) {
            return Err(Error::Decode {
                offset: 6,
                reason: format!("invalid header {h:?}"),
            });
        }
        Ok(h)
    }
}

/// Compressed factors of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub user_id: u16,
    pub n_f_u: u32,
    pub l_u: u16,
    pub perm: Vec<usize>,
    pub q: QuantizedMatrix,
    pub r: QuantizedMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedPayload {
    pub header: PayloadHeader,
    pub users: Vec<UserRecord>,
}

impl CompressedPayload {
    pub fn quantizer(&self) -> QuantizerSpec {
        QuantizerSpec::new(self.header.b_q / 2).expect("validated header")
    }

    /// Quantized factor sample bits, `Σ L_u (N_f_u + N_r) b_Q`.
    pub fn sample_bits(&self) -> u64 {
        let n_r = self.header.n_r as u64;
        self.users
            .iter()
            .map(|u| u.l_u as u64 * (u.n_f_u as u64 + n_r) * self.header.b_q as u64)
            .sum()
    }

    /// Antenna-index overhead, `N_u N_r ceil(log2 N_r)`.
    pub fn index_overhead_bits(&self) -> u64 {
        self.users.len() as u64 * self.header.n_r as u64 * index_bits(self.header.n_r as usize) as u64
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut w = BitWriter::new();
        self.header.write(QR_MAGIC, &mut w);
        let width = index_bits(self.header.n_r as usize);
        let comp_bits = self.header.b_q / 2;
        for u in &self.users {
            w.write_bytes(&u.user_id.to_le_bytes());
            w.write_bytes(&u.n_f_u.to_le_bytes());
            w.write_bytes(&u.l_u.to_le_bytes());
            for &p in &u.perm {
                w.write(p as u64, width);
            }
            w.write(u.q.scale.to_bits() as u64, 32);
            w.write(u.r.scale.to_bits() as u64, 32);
            for &c in u.q.codes.iter().chain(&u.r.codes) {
                w.write_signed(c, comp_bits);
            }
            w.align();
        }
        w.finish()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = BitReader::new(bytes);
        let header = PayloadHeader::read(QR_MAGIC, &mut r)?;
        let n_r = header.n_r as usize;
        let width = index_bits(n_r);
        let spec = QuantizerSpec::new(header.b_q / 2).map_err(|e| Error::Decode {
            offset: 22,
            reason: e.to_string(),
        })?;
        let mut users = Vec::with_capacity(header.count as usize);
        for _ in 0..header.count {
            let start = r.byte_offset();
            let user_id = r.read_u16_le()?;
            let n_f_u = r.read_u32_le()?;
            let l_u = r.read_u16_le()?;
            if l_u == 0 || l_u as usize > n_r || n_f_u == 0 || n_f_u > header.n_fft {
                return Err(Error::Decode {
                    offset: start,
                    reason: format!("user {user_id}: invalid dimensions N_f_u={n_f_u}, L_u={l_u}"),
                });
            }
            let needed = n_r as u64 * width as u64
                + SCALE_BITS
                + 2 * l_u as u64 * (n_f_u as u64 + n_r as u64) * spec.bits_per_component() as u64;
            if needed > r.remaining_bits() as u64 {
                return Err(Error::Decode {
                    offset: r.byte_offset(),
                    reason: format!("user {user_id}: record needs {needed} bits, {} left", r.remaining_bits()),
                });
            }
            let perm: Vec<usize> = (0..n_r).map(|_| r.read(width).map(|v| v as usize)).collect::<Result<_>>()?;
            check_permutation(&perm).map_err(|e| Error::Decode {
                offset: start + 8,
                reason: e.to_string(),
            })?;
            let q_scale = f32::from_bits(r.read(32)? as u32);
            let r_scale = f32::from_bits(r.read(32)? as u32);
            for s in [q_scale, r_scale] {
                if !s.is_finite() || s < 0.0 {
                    return Err(Error::Decode {
                        offset: r.byte_offset(),
                        reason: format!("user {user_id}: invalid scale {s}"),
                    });
                }
            }
            let q = read_matrix(&mut r, n_f_u as usize, l_u as usize, spec, q_scale)?;
            let rm = read_matrix(&mut r, l_u as usize, n_r, spec, r_scale)?;
            r.align();
            users.push(UserRecord {
                user_id,
                n_f_u,
                l_u,
                perm,
                q,
                r: rm,
            });
        }
        if r.remaining_bits() != 0 {
            return Err(Error::Decode {
                offset: r.byte_offset(),
                reason: format!("{} trailing bytes", r.remaining_bits() / 8),
            });
        }
        Ok(Self { header, users })
    }
}

fn read_matrix(
    r: &mut BitReader<'_>,
    rows: usize,
    cols: usize,
    spec: QuantizerSpec,
    scale: f32,
) -> Result<QuantizedMatrix> {
    let bits = spec.bits_per_component();
    let max = spec.max_code();
    let mut codes = Vec::with_capacity(2 * rows * cols);
    for _ in 0..2 * rows * cols {
        let c = r.read_signed(bits)?;
        if c < -max {
            return Err(Error::Decode {
                offset: r.byte_offset(),
                reason: format!("code {c} outside the symmetric range ±{max}"),
            });
        }
        codes.push(c);
    }
    Ok(QuantizedMatrix {
        rows,
        cols,
        spec,
        scale,
        codes,
    })
}

/// Rank-`k` time-domain SVD factors at a reduced bit width.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdPayload {
    pub header: PayloadHeader,
    /// Bits per real component chosen to meet the bit budget.
    pub bits_per_component: u16,
    /// `U·diag(s)`, `N × k`.
    pub us: QuantizedMatrix,
    /// `V`, `N_r × k`.
    pub v: QuantizedMatrix,
}

impl SvdPayload {
    pub fn rank(&self) -> usize {
        self.header.count as usize
    }

    /// `k (N + N_r) · 2b`.
    pub fn sample_bits(&self) -> u64 {
        self.rank() as u64
            * (self.header.n as u64 + self.header.n_r as u64)
            * 2
            * self.bits_per_component as u64
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut w = BitWriter::new();
        self.header.write(SVD_MAGIC, &mut w);
        w.write_bytes(&self.bits_per_component.to_le_bytes());
        w.write(self.us.scale.to_bits() as u64, 32);
        w.write(self.v.scale.to_bits() as u64, 32);
        let b = self.bits_per_component as u32;
        for &c in self.us.codes.iter().chain(&self.v.codes) {
            w.write_signed(c, b);
        }
        w.finish()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = BitReader::new(bytes);
        let header = PayloadHeader::read(SVD_MAGIC, &mut r)?;
        let b = r.read_u16_le()?;
        let spec = QuantizerSpec::new(b as u32).map_err(|e| Error::Decode {
            offset: HEADER_BYTES,
            reason: e.to_string(),
        })?;
        let k = header.count as usize;
        if k == 0 || k > header.n_r.min(header.n) as usize {
            return Err(Error::Decode {
                offset: 26,
                reason: format!("rank {k} out of range"),
            });
        }
        let us_scale = f32::from_bits(r.read(32)? as u32);
        let v_scale = f32::from_bits(r.read(32)? as u32);
        let us = read_matrix(&mut r, header.n as usize, k, spec, us_scale)?;
        let v = read_matrix(&mut r, header.n_r as usize, k, spec, v_scale)?;
        r.align();
        if r.remaining_bits() != 0 {
            return Err(Error::Decode {
                offset: r.byte_offset(),
                reason: "trailing bytes".into(),
            });
        }
        Ok(Self {
            header,
            bits_per_component: b,
            us,
            v,
        })
    }
}
