//! Small dense linear-algebra kernel.
//!
//! Everything here works on row-major `f64` matrices of at most a few dozen
//! rows. The only decompositions are Gauss-Jordan inversion with partial
//! pivoting and a cyclic Jacobi sweep used for symmetric PSD checks.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivot magnitude below which a matrix is treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix row length",
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> f64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// `(X + Xᵀ) / 2`.
    pub fn symmetrize(&self) -> Self {
        assert!(self.is_square(), "symmetrize on a non-square matrix");
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.transpose()) <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        assert!(self.is_square(), "eigenvalues of a non-square matrix");
        let n = self.rows;
        let mut a = self.symmetrize();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off.sqrt() <= 1e-14 * (1.0 + a.max_abs()) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev = a.diagonal();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Symmetric to `tol` and smallest eigenvalue at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_symmetric(tol)
            && self
                .symmetric_eigenvalues()
                .first()
                .is_none_or(|&min| min >= -tol)
    }

    /// Lower-triangular `L` with `L Lᵀ = self` for a symmetric PSD matrix.
    ///
    /// Columns whose pivot falls below `tol` are zeroed, so singular PSD
    /// inputs (for example an all-zero covariance) are accepted.
    pub fn psd_cholesky(&self, tol: f64) -> Result<Matrix> {
        self.check_square("psd_cholesky")?;
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let d = self[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
            if d < -tol * (1.0 + self.max_abs()) {
                return Err(Error::InvalidModel(format!(
                    "matrix is not positive semi-definite (pivot {d:e})"
                )));
            }
            if d <= tol {
                continue;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let s = self[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
                l[(i, j)] = s / djj;
            }
        }
        Ok(l)
    }

    fn check_square(&self, context: &'static str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context,
                expected: self.rows,
                found: self.cols,
            })
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| self.row(i)))
            .finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// Gauss-Jordan inversion with partial pivoting.
pub fn invert(m: &Matrix) -> Result<Matrix> {
    m.check_square("invert")?;
    let n = m.rows;
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[(r, col)].abs().total_cmp(&a[(s, col)].abs()))
            .expect("non-empty pivot range");
        let pivot = a[(pivot_row, col)];
        if pivot.abs() < PIVOT_TOLERANCE {
            return Err(Error::SingularMatrix { pivot: pivot.abs() });
        }
        if pivot_row != col {
            for j in 0..n {
                a.data.swap(pivot_row * n + j, col * n + j);
                inv.data.swap(pivot_row * n + j, col * n + j);
            }
        }
        let scale = 1.0 / pivot;
        for j in 0..n {
            a[(col, j)] *= scale;
            inv[(col, j)] *= scale;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                a[(r, j)] -= factor * a[(col, j)];
                inv[(r, j)] -= factor * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}

/// Pseudo-inverse of a Gram matrix whose masked-off rows and columns are zero.
///
/// Inverts the submatrix on the retained indices and embeds it back into an
/// `n × n` zero matrix. For the masked innovation Gram matrix this is the
/// Moore-Penrose pseudo-inverse.
pub fn masked_pseudo_inverse(g: &Matrix, mask: &[bool]) -> Result<Matrix> {
    g.check_square("masked_pseudo_inverse")?;
    if mask.len() != g.rows {
        return Err(Error::DimensionMismatch {
            context: "pseudo-inverse mask",
            expected: g.rows,
            found: mask.len(),
        });
    }
    let kept: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let n = g.rows;
    let mut out = Matrix::zeros(n, n);
    if kept.is_empty() {
        return Ok(out);
    }
    let k = kept.len();
    let mut sub = Matrix::zeros(k, k);
    for (a, &i) in kept.iter().enumerate() {
        for (b, &j) in kept.iter().enumerate() {
            sub[(a, b)] = g[(i, j)];
        }
    }
    let sub_inv = invert(&sub)?;
    for (a, &i) in kept.iter().enumerate() {
        for (b, &j) in kept.iter().enumerate() {
            out[(i, j)] = sub_inv[(a, b)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_identity_and_diagonal() {
        assert_eq!(invert(&Matrix::identity(2)).unwrap(), Matrix::identity(2));
        let inv = invert(&Matrix::diag(&[2.0, 4.0])).unwrap();
        assert_eq!(inv, Matrix::diag(&[0.5, 0.25]));
    }

    #[test]
    fn invert_rank_one_is_singular() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(invert(&m), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn invert_rejects_non_square() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(invert(&m), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn pinv_full_mask_is_inverse_bitwise() {
        let g = Matrix::from_rows(&[[3.0, 1.0], [1.0, 2.0]]).unwrap();
        let p = masked_pseudo_inverse(&g, &[true, true]).unwrap();
        assert_eq!(p, invert(&g).unwrap());
    }

    #[test]
    fn pinv_empty_mask_is_zero() {
        let g = Matrix::from_rows(&[[3.0, 1.0], [1.0, 2.0]]).unwrap();
        let p = masked_pseudo_inverse(&g, &[false, false]).unwrap();
        assert_eq!(p, Matrix::zeros(2, 2));
    }

    #[test]
    fn pinv_partial_mask() {
        // diag(2,5) with row/col 2 masked off is diag(2,0)
        let g = Matrix::diag(&[2.0, 0.0]);
        let p = masked_pseudo_inverse(&g, &[true, false]).unwrap();
        assert_eq!(p, Matrix::diag(&[0.5, 0.0]));
    }

    #[test]
    fn trace_examples() {
        assert_eq!(Matrix::identity(3).trace(), 3.0);
        assert!((Matrix::diag(&[0.530, 0.088]).trace() - 0.618).abs() < 1e-12);
        assert_eq!(Matrix::zeros(2, 2).trace(), 0.0);
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn jacobi_eigenvalues() {
        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let ev = m.symmetric_eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
        assert!(m.is_psd(1e-9));
        let n = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(!n.is_psd(1e-9));
    }
}
