//! Fronthaul compression-ratio accounting.

use super::payload::index_bits;

/// Bit counts behind one compression ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrReport {
    /// Uncompressed `N × N_r` block at `b_Q` bits per complex sample.
    pub b_org: u64,
    /// Quantized `Q_u` and `R_u` samples.
    pub b_cmp: u64,
    /// Antenna permutation indices.
    pub b_ovh: u64,
    pub cr: f64,
}

/// `CR = N N_r b_Q / (Σ_u L_u (N_f_u + N_r) b_Q + N_u N_r log2 N_r)`.
///
/// `users` holds `(N_f_u, L_u)` per user; `b_q` is bits per complex sample.
/// For non-power-of-two `N_r` the index width is `ceil(log2 N_r)`.
pub fn compression_ratio(n: usize, n_r: usize, b_q: u32, users: &[(usize, usize)]) -> CrReport {
    let b_org = n as u64 * n_r as u64 * b_q as u64;
    let b_cmp: u64 = users
        .iter()
        .map(|&(n_f_u, l_u)| l_u as u64 * (n_f_u as u64 + n_r as u64) * b_q as u64)
        .sum();
    let b_ovh = users.len() as u64 * n_r as u64 * index_bits(n_r) as u64;
    CrReport {
        b_org,
        b_cmp,
        b_ovh,
        cr: b_org as f64 / (b_cmp + b_ovh) as f64,
    }
}
