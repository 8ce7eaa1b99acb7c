//! Dense complex matrix kernels.
//!
//! [`IQMatrix`] stores baseband samples row-major: rows are time samples or
//! subcarriers, columns are receive antennas. The decompositions work on
//! column-major scratch copies internally because every kernel here is a
//! sequence of column operations.

pub(crate) mod qr;
mod svd;

pub use qr::{
    column_norms, pivoted_qr_approx, pivoted_qr_with_rule, qr_approx_with_basis, qr_reconstruct,
    PivotRule, QrFactors,
};
pub use svd::{truncated_svd, truncated_svd_with_sweeps, SvdFactors, DEFAULT_MAX_SWEEPS};

use crate::error::{invalid, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IQMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl IQMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(invalid("columns have unequal lengths"));
        }
        if rows == 0 || cols == 0 {
            return Err(invalid("empty column set"));
        }
        Ok(Self::from_fn(rows, cols, |i, j| columns[j][i]))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[C64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self.set(i, j, *v);
        }
    }

    /// Column-major copy, one `Vec` per column.
    pub fn to_columns(&self) -> Vec<Vec<C64>> {
        let mut out = vec![Vec::with_capacity(self.rows); self.cols];
        for row in self.data.chunks_exact(self.cols) {
            for (col, v) in out.iter_mut().zip(row) {
                col.push(*v);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(invalid("matrix contains non-finite values"))
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &IQMatrix) -> Result<IQMatrix> {
        if self.cols != other.rows {
            return Err(invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = IQMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, a) in self.row(i).iter().enumerate() {
                if *a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &IQMatrix) -> Result<IQMatrix> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(IQMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &IQMatrix) -> Result<IQMatrix> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(IQMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> IQMatrix {
        IQMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Result<IQMatrix> {
        if indices.is_empty() {
            return Err(invalid("empty row selection"));
        }
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(invalid(format!("row {i} out of range for {} rows", self.rows)));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(IQMatrix { rows: indices.len(), cols: self.cols, data })
    }

    /// Largest absolute real or imaginary component.
    pub fn max_abs_component(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.re.abs()).max(z.im.abs()))
    }

    fn check_same_shape(&self, other: &IQMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(invalid(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

/// Relative Frobenius error `‖a − b‖_F / ‖a‖_F`, or the absolute error when `a` is zero.
pub fn frobenius_error(a: &IQMatrix, b: &IQMatrix) -> Result<f64> {
    let diff = a.sub(b)?.frobenius_norm();
    let base = a.frobenius_norm();
    Ok(if base == 0.0 { diff } else { diff / base })
}

#[inline]
pub(crate) fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    // a^H b
    a.iter().zip(b).fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

#[inline]
pub(crate) fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

#[inline]
pub(crate) fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
