//! Norm-pivoted truncated QR approximation.
//!
//! The basis of the approximation is a subset of the input columns (antennas),
//! picked by column power and orthonormalized with modified Gram–Schmidt. The
//! coefficient matrix holds the projection of every column onto that basis, so
//! `Q·R` is the orthogonal projection of the input onto the span of the
//! selected columns.

use super::{axpy, dot_conj, norm_sqr, IQMatrix, C64};
use crate::error::{invalid, Error, Result};

/// Pivot residual below this fraction of the largest column norm is treated
/// as rank deficiency.
const RANK_TOL: f64 = 1e-14;

/// How basis columns are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Rank the columns once by their original norm and take the top `l`.
    #[default]
    ColumnNorm,
    /// Classic rank-revealing pivoting: pick the column with the largest
    /// residual after projecting out the basis chosen so far.
    ResidualNorm,
}

/// Truncated QR factors of one matrix.
///
/// `r` is stored in permuted column order: column `j` of `r` belongs to
/// original column `perm[j]`. The first `l_u` entries of `perm` are the basis
/// columns in selection order; the remainder follow in original order.
#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors {
    pub q: IQMatrix,
    pub r: IQMatrix,
    pub perm: Vec<usize>,
    pub l_u: usize,
}

impl QrFactors {
    /// Checks the dimension and permutation invariants.
    pub fn validate(&self) -> Result<()> {
        let n_r = self.perm.len();
        if self.l_u == 0 || self.l_u > n_r {
            return Err(invalid(format!("rank {} out of range for {} columns", self.l_u, n_r)));
        }
        if self.q.cols() != self.l_u || self.r.rows() != self.l_u || self.r.cols() != n_r {
            return Err(invalid(format!(
                "inconsistent factor shapes: q {:?}, r {:?}, rank {}, {} permutation entries",
                self.q.shape(),
                self.r.shape(),
                self.l_u,
                n_r
            )));
        }
        check_permutation(&self.perm)
    }
}

pub(crate) fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(invalid(format!("index {p} breaks the column permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Euclidean norm of every column.
pub fn column_norms(a: &IQMatrix) -> Result<Vec<f64>> {
    a.ensure_finite()?;
    let mut acc = vec![0.0; a.cols()];
    for i in 0..a.rows() {
        for (s, z) in acc.iter_mut().zip(a.row(i)) {
            *s += z.norm_sqr();
        }
    }
    Ok(acc.into_iter().map(f64::sqrt).collect())
}

/// Rank-`l` approximation using the `l` strongest columns as basis.
pub fn pivoted_qr_approx(a: &IQMatrix, l: usize) -> Result<QrFactors> {
    pivoted_qr_with_rule(a, l, PivotRule::ColumnNorm)
}

pub fn pivoted_qr_with_rule(a: &IQMatrix, l: usize, rule: PivotRule) -> Result<QrFactors> {
    check_rank(a, l)?;
    a.ensure_finite()?;
    let columns = a.to_columns();
    let norms: Vec<f64> = columns.iter().map(|c| norm_sqr(c).sqrt()).collect();
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    let threshold = RANK_TOL * max_norm;

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(l);
    let mut chosen: Vec<usize> = Vec::with_capacity(l);

    match rule {
        PivotRule::ColumnNorm => {
            for (step, idx) in order_by_norm(&norms).into_iter().take(l).enumerate() {
                let q = orthonormalize(&columns[idx], &basis, step, threshold)?;
                basis.push(q);
                chosen.push(idx);
            }
        }
        PivotRule::ResidualNorm => {
            let mut residual = columns.clone();
            let mut used = vec![false; columns.len()];
            for step in 0..l {
                // strict comparison keeps the lowest index on ties
                let mut best: Option<(usize, f64)> = None;
                for (j, col) in residual.iter().enumerate() {
                    if used[j] {
                        continue;
                    }
                    let n = norm_sqr(col);
                    if best.is_none_or(|(_, b)| n > b) {
                        best = Some((j, n));
                    }
                }
                let (idx, _) = best.expect("l <= cols");
                let q = orthonormalize(&columns[idx], &basis, step, threshold)?;
                for (j, col) in residual.iter_mut().enumerate() {
                    if !used[j] && j != idx {
                        let c = dot_conj(&q, col);
                        axpy(-c, &q, col);
                    }
                }
                used[idx] = true;
                basis.push(q);
                chosen.push(idx);
            }
        }
    }

    Ok(assemble(a.rows(), &columns, basis, chosen))
}

/// Approximation on a caller-supplied basis (column indices in selection order).
pub fn qr_approx_with_basis(a: &IQMatrix, basis_idx: &[usize]) -> Result<QrFactors> {
    check_rank(a, basis_idx.len())?;
    a.ensure_finite()?;
    let mut seen = vec![false; a.cols()];
    for &b in basis_idx {
        if b >= a.cols() || seen[b] {
            return Err(invalid(format!("basis index {b} is out of range or repeated")));
        }
        seen[b] = true;
    }
    let columns = a.to_columns();
    let max_norm = columns.iter().map(|c| norm_sqr(c).sqrt()).fold(0.0, f64::max);
    let threshold = RANK_TOL * max_norm;
    let mut basis = Vec::with_capacity(basis_idx.len());
    for (step, &idx) in basis_idx.iter().enumerate() {
        let q = orthonormalize(&columns[idx], &basis, step, threshold)?;
        basis.push(q);
    }
    Ok(assemble(a.rows(), &columns, basis, basis_idx.to_vec()))
}

/// `Q·R` with the columns put back in original order.
pub fn qr_reconstruct(f: &QrFactors) -> Result<IQMatrix> {
    f.validate()?;
    let product = f.q.matmul(&f.r)?;
    let mut out = IQMatrix::zeros(product.rows(), product.cols());
    for i in 0..product.rows() {
        let src = product.row(i);
        let dst = out.row_mut(i);
        for (j, &orig) in f.perm.iter().enumerate() {
            dst[orig] = src[j];
        }
    }
    Ok(out)
}

fn check_rank(a: &IQMatrix, l: usize) -> Result<()> {
    let max_rank = a.rows().min(a.cols());
    if l == 0 || l > max_rank {
        return Err(invalid(format!(
            "rank {l} outside 1..={max_rank} for a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    Ok(())
}

/// Column indices by decreasing norm; equal norms keep the lower index first.
fn order_by_norm(norms: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..norms.len()).collect();
    idx.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    idx
}

/// Modified Gram–Schmidt against the current basis, run twice so that
/// orthogonality holds to working precision even for nearly dependent pivots.
fn orthonormalize(col: &[C64], basis: &[Vec<C64>], step: usize, threshold: f64) -> Result<Vec<C64>> {
    let mut v = col.to_vec();
    for _ in 0..2 {
        for q in basis {
            let c = dot_conj(q, &v);
            axpy(-c, q, &mut v);
        }
    }
    let norm = norm_sqr(&v).sqrt();
    if norm <= threshold || norm == 0.0 {
        return Err(Error::RankDeficient { step, norm, threshold });
    }
    let inv = 1.0 / norm;
    v.iter_mut().for_each(|z| *z *= inv);
    Ok(v)
}

fn assemble(rows: usize, columns: &[Vec<C64>], basis: Vec<Vec<C64>>, chosen: Vec<usize>) -> QrFactors {
    let n_r = columns.len();
    let l = basis.len();
    let mut is_basis = vec![false; n_r];
    for &c in &chosen {
        is_basis[c] = true;
    }
    let mut perm = chosen;
    perm.extend((0..n_r).filter(|&j| !is_basis[j]));

    let mut r = IQMatrix::zeros(l, n_r);
    for (j, &orig) in perm.iter().enumerate() {
        for (i, q) in basis.iter().enumerate() {
            r.set(i, j, dot_conj(q, &columns[orig]));
        }
    }
    let q = IQMatrix::from_fn(rows, l, |i, j| basis[j][i]);
    QrFactors { q, r, perm, l_u: l }
}
