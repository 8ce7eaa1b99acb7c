//! Gray-coded square QAM with the NR bit-to-symbol convention.
//!
//! Bits `b0 b1 b2 …` of a symbol alternate between the in-phase axis (even
//! positions) and the quadrature axis (odd positions). On each axis the
//! amplitude is `(1−2c0)·(2^{k−1} − (1−2c1)·(2^{k−2} − …))`, a
//! binary-reflected Gray labelling of the `2^k` PAM levels.

use crate::error::{invalid, Result};
use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct QamConfig {
    order: usize,
    bits_per_symbol: usize,
    norm: f64,
    /// PAM amplitude (unnormalized) for every per-axis bit label.
    levels: Vec<f64>,
}

impl QamConfig {
    pub fn new(order: usize) -> Result<Self> {
        let bits_per_symbol = match order {
            4 => 2,
            16 => 4,
            64 => 6,
            256 => 8,
            _ => return Err(invalid(format!("unsupported QAM order {order}"))),
        };
        let axis_bits = bits_per_symbol / 2;
        let levels: Vec<f64> = (0..1usize << axis_bits).map(|label| axis_amplitude(label, axis_bits)).collect();
        // mean of a² over the PAM levels, doubled for two axes
        let energy = 2.0 * levels.iter().map(|a| a * a).sum::<f64>() / levels.len() as f64;
        Ok(Self {
            order,
            bits_per_symbol,
            norm: 1.0 / energy.sqrt(),
            levels,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Scale applied to integer amplitudes for unit average energy.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// Half the distance between adjacent constellation levels.
    pub fn half_min_distance(&self) -> f64 {
        self.norm
    }

    /// Every constellation point indexed by its bit label (b0 is the MSB).
    pub fn constellation(&self) -> Vec<C64> {
        (0..self.order)
            .map(|label| {
                let bits: Vec<u8> = (0..self.bits_per_symbol)
                    .map(|i| ((label >> (self.bits_per_symbol - 1 - i)) & 1) as u8)
                    .collect();
                self.map_symbol(&bits)
            })
            .collect()
    }

    fn map_symbol(&self, bits: &[u8]) -> C64 {
        let (mut li, mut lq) = (0usize, 0usize);
        for pair in bits.chunks_exact(2) {
            li = (li << 1) | pair[0] as usize;
            lq = (lq << 1) | pair[1] as usize;
        }
        C64::new(self.levels[li], self.levels[lq]) * self.norm
    }

    /// Nearest PAM label on one axis.
    fn slice_axis(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, &a) in self.levels.iter().enumerate() {
            let d = (x - a * self.norm).abs();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }
}

fn axis_amplitude(label: usize, axis_bits: usize) -> f64 {
    // c_0 is the most significant label bit
    let sign = |j: usize| 1.0 - 2.0 * ((label >> (axis_bits - 1 - j)) & 1) as f64;
    let mut nested = 1.0;
    for j in (0..axis_bits - 1).rev() {
        nested = (1usize << (axis_bits - 1 - j)) as f64 - sign(j + 1) * nested;
    }
    sign(0) * nested
}

pub fn qam_modulate(bits: &[u8], cfg: &QamConfig) -> Result<Vec<C64>> {
    if !bits.len().is_multiple_of(cfg.bits_per_symbol) {
        return Err(invalid(format!(
            "{} bits is not a multiple of {} bits per symbol",
            bits.len(),
            cfg.bits_per_symbol
        )));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(invalid("bit values must be 0 or 1"));
    }
    Ok(bits.chunks_exact(cfg.bits_per_symbol).map(|b| cfg.map_symbol(b)).collect())
}

/// Hard-decision demapping to the nearest constellation point.
pub fn qam_demodulate(symbols: &[C64], cfg: &QamConfig) -> Vec<u8> {
    let axis_bits = cfg.bits_per_symbol / 2;
    let mut out = Vec::with_capacity(symbols.len() * cfg.bits_per_symbol);
    for s in symbols {
        let li = cfg.slice_axis(s.re);
        let lq = cfg.slice_axis(s.im);
        for j in 0..axis_bits {
            let shift = axis_bits - 1 - j;
            out.push(((li >> shift) & 1) as u8);
            out.push(((lq >> shift) & 1) as u8);
        }
    }
    out
}
