//! Truncated SVD by Householder reduction followed by one-sided Jacobi.
//!
//! Tall inputs are first reduced to an `n×n` triangular factor so that the
//! Jacobi sweeps run on the small factor; wide inputs are handled through
//! their adjoint.

use super::{axpy, dot_conj, norm_sqr, IQMatrix, C64};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 60;

/// Top-`k` singular triplets: `a ≈ u·diag(s)·v^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: IQMatrix,
    pub s: Vec<f64>,
    pub v: IQMatrix,
    pub k: usize,
}

impl SvdFactors {
    /// `u·diag(s)·v^H`.
    pub fn reconstruct(&self) -> IQMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut out = IQMatrix::zeros(m, n);
        for i in 0..m {
            let urow = self.u.row(i);
            let orow = out.row_mut(i);
            for (t, (&uit, &st)) in urow.iter().zip(&self.s).enumerate() {
                let coef = uit * st;
                for (j, o) in orow.iter_mut().enumerate() {
                    *o += coef * self.v.get(j, t).conj();
                }
            }
        }
        out
    }
}

pub fn truncated_svd(a: &IQMatrix, k: usize) -> Result<SvdFactors> {
    truncated_svd_with_sweeps(a, k, DEFAULT_MAX_SWEEPS)
}

pub fn truncated_svd_with_sweeps(a: &IQMatrix, k: usize, max_sweeps: usize) -> Result<SvdFactors> {
    let max_rank = a.rows().min(a.cols());
    if k == 0 || k > max_rank {
        return Err(invalid(format!(
            "rank {k} outside 1..={max_rank} for a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    a.ensure_finite()?;
    if a.rows() >= a.cols() {
        let (u, s, v) = tall_svd(a.to_columns(), a.rows(), k, max_sweeps)?;
        Ok(SvdFactors { u: from_cols(&u), s, v: from_cols(&v), k })
    } else {
        let (u, s, v) = tall_svd(a.adjoint().to_columns(), a.cols(), k, max_sweeps)?;
        Ok(SvdFactors { u: from_cols(&v), s, v: from_cols(&u), k })
    }
}

fn from_cols(cols: &[Vec<C64>]) -> IQMatrix {
    IQMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i])
}

type Triplets = (Vec<Vec<C64>>, Vec<f64>, Vec<Vec<C64>>);

/// SVD of an `m×n` matrix given as `n` columns with `m ≥ n`.
fn tall_svd(mut cols: Vec<Vec<C64>>, m: usize, k: usize, max_sweeps: usize) -> Result<Triplets> {
    let n = cols.len();

    // Householder QR, reflectors kept for applying Q later.
    let mut reflectors: Vec<Option<Vec<C64>>> = Vec::with_capacity(n);
    for j in 0..n {
        let x = &cols[j][j..];
        let sigma = norm_sqr(x).sqrt();
        if sigma == 0.0 {
            reflectors.push(None);
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * sigma;
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vn = norm_sqr(&v).sqrt();
        v.iter_mut().for_each(|z| *z /= vn);
        for col in cols.iter_mut().skip(j) {
            let w = dot_conj(&v, &col[j..]);
            axpy(-2.0 * w, &v, &mut col[j..]);
        }
        reflectors.push(Some(v));
    }
    let mut work: Vec<Vec<C64>> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mut r = vec![C64::new(0.0, 0.0); n];
            r[..=j].copy_from_slice(&c[..=j]);
            r
        })
        .collect();

    let mut vmat: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();

    let tol = f64::EPSILON * n as f64;
    let mut converged = n < 2;
    let mut residual = 0.0;
    for _ in 0..max_sweeps {
        residual = 0.0_f64;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norm_sqr(&work[p]);
                let beta = norm_sqr(&work[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot_conj(&work[p], &work[q]);
                let g = gamma.norm();
                let off = g / (alpha * beta).sqrt();
                residual = residual.max(off);
                if off <= tol {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut work, p, q, c, s, phase);
                rotate(&mut vmat, p, q, c, s, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence { sweeps: max_sweeps, residual });
    }

    let sing: Vec<f64> = work.iter().map(|c| norm_sqr(c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sing[j].total_cmp(&sing[i]));
    let top = &order[..k];

    let s: Vec<f64> = top.iter().map(|&j| sing[j]).collect();
    let floor = s[0] * f64::EPSILON * m as f64;
    let mut u: Vec<Option<Vec<C64>>> = top
        .iter()
        .map(|&j| {
            if sing[j] <= floor || sing[j] == 0.0 {
                return None;
            }
            let mut x = vec![C64::new(0.0, 0.0); m];
            for (xi, wi) in x.iter_mut().zip(&work[j]) {
                *xi = wi / sing[j];
            }
            for (jj, refl) in reflectors.iter().enumerate().rev() {
                if let Some(v) = refl {
                    let w = dot_conj(v, &x[jj..]);
                    axpy(-2.0 * w, v, &mut x[jj..]);
                }
            }
            Some(x)
        })
        .collect();
    complete_basis(&mut u, m);
    let u: Vec<Vec<C64>> = u.into_iter().map(|x| x.expect("completed")).collect();
    let v: Vec<Vec<C64>> = top.iter().map(|&j| vmat[j].clone()).collect();
    Ok((u, s, v))
}

/// Applies the complex Jacobi rotation to columns `p`, `q`.
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let (lo, hi) = cols.split_at_mut(q);
    let xp = &mut lo[p];
    let xq = &mut hi[0];
    let conj_phase = phase.conj();
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let bq = *b * conj_phase;
        let ap = *a;
        *a = ap * c - bq * s;
        *b = ap * s + bq * c;
    }
}

/// Fills left singular vectors of (numerically) zero singular values with
/// unit vectors orthogonal to the rest.
fn complete_basis(u: &mut [Option<Vec<C64>>], m: usize) {
    let mut e = 0;
    for idx in 0..u.len() {
        if u[idx].is_some() {
            continue;
        }
        loop {
            assert!(e < m, "cannot complete orthonormal basis");
            let mut x = vec![C64::new(0.0, 0.0); m];
            x[e] = C64::new(1.0, 0.0);
            e += 1;
            for _ in 0..2 {
                for other in u.iter().flatten() {
                    let c = dot_conj(other, &x);
                    axpy(-c, other, &mut x);
                }
            }
            let nrm = norm_sqr(&x).sqrt();
            if nrm > 0.5 {
                x.iter_mut().for_each(|z| *z /= nrm);
                u[idx] = Some(x);
                break;
            }
        }
    }
}
