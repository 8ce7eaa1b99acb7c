#![allow(dead_code)]

use nalgebra::{DMatrix, Complex};
use qrfh::{IQMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) / 2f64.sqrt()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> IQMatrix {
    IQMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Product of Gaussian `rows × r` and `r × cols` factors: rank exactly `r` almost surely.
pub fn exact_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, r: usize) -> IQMatrix {
    let a = random_matrix(rng, rows, r);
    let b = random_matrix(rng, r, cols);
    a.matmul(&b).unwrap()
}

pub fn to_na(m: &IQMatrix) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        let z = m.get(i, j);
        Complex::new(z.re, z.im)
    })
}

/// Singular values from nalgebra, descending.
pub fn reference_singular_values(m: &IQMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Best rank-`k` relative Frobenius error from the singular values.
pub fn eckart_young_error(s: &[f64], k: usize) -> f64 {
    let total: f64 = s.iter().map(|v| v * v).sum();
    let tail: f64 = s[k.min(s.len())..].iter().map(|v| v * v).sum();
    (tail / total).sqrt()
}

pub fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..=1u8)).collect()
}
