//! Dense linear algebra for small dimensions.
//!
//! Everything is stored row-major in a flat `Vec<f64>`. The dimensions used by
//! the learners are tiny (a few dozen at most), so the routines favour
//! robustness over asymptotic speed: Cholesky for factorization and inversion,
//! cyclic Jacobi rotations for eigenvalues.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, Index};

use crate::error::{invalid, Error, Result};

/// Relative pivot tolerance used by [`spd_factorize`].
pub const PIVOT_TOLERANCE: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

/// A dense real vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Wraps `entries`, rejecting empty or non-finite input.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("vector", "dimension must be at least 1"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid("vector", "entries must be finite"));
        }
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// The `i`-th standard basis vector.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(dot(&self.0, &self.0))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self += factor * other`
    pub fn axpy(&mut self, factor: f64, other: &[f64]) {
        axpy(&mut self.0, factor, other);
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        max_abs_diff(&self.0, other)
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(y: &mut [f64], factor: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += factor * xi;
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// A general square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(invalid("matrix", "dimension must be at least 1"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix", "entries must be finite"));
        }
        Ok(Self { dim, data })
    }

    /// Diagonal matrix with the given diagonal.
    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vector {
        debug_assert_eq!(v.len(), self.dim);
        Vector((0..self.dim).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn mul_mat(&self, other: &Matrix) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, factor: f64, other: &Matrix) {
        axpy(&mut self.data, factor, &other.data);
    }

    /// `self += factor * v vᵀ`
    pub fn add_outer(&mut self, factor: f64, v: &[f64]) {
        let n = self.dim;
        for i in 0..n {
            let fi = factor * v[i];
            for j in 0..n {
                self.data[i * n + j] += fi * v[j];
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(dot(&self.data, &self.data))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        max_abs_diff(&self.data, &other.data)
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| (0..i).all(|j| self.data[i * n + j] == self.data[j * n + i]))
    }

    /// Spectral norm, computed as the square root of the top eigenvalue of `AᵀA`.
    pub fn op_norm(&self) -> f64 {
        let gram = SymMatrix::symmetrized(self.transpose().mul_mat(self));
        let top = symmetric_eigenvalues(&gram)
            .last()
            .copied()
            .unwrap_or(0.0);
        libm::sqrt(top.max(0.0))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

/// A matrix whose entries satisfy `m[i][j] == m[j][i]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Rejects matrices that are not exactly symmetric.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_symmetric() {
            return Err(invalid("matrix", "not symmetric"));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Replaces `m` by `(m + mᵀ)/2`, removing round-off asymmetry.
    pub fn symmetrized(mut m: Matrix) -> Self {
        let n = m.dim;
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (m.data[i * n + j] + m.data[j * n + i]);
                m.data[i * n + j] = avg;
                m.data[j * n + i] = avg;
            }
        }
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Matrix::zeros(dim))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self(Matrix::diagonal(diag))
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.scaled(factor))
    }

    /// `self += factor * v vᵀ`, which keeps the matrix exactly symmetric.
    pub fn add_outer(&mut self, factor: f64, v: &[f64]) {
        let n = self.0.dim;
        for i in 0..n {
            let fi = factor * v[i];
            for j in 0..=i {
                let value = self.0.data[i * n + j] + fi * v[j];
                self.0.data[i * n + j] = value;
                self.0.data[j * n + i] = value;
            }
        }
    }

    /// Quadratic form `uᵀ M v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        (0..self.0.dim).map(|i| u[i] * dot(self.0.row(i), v)).sum()
    }
}

impl Deref for SymMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// A symmetric positive-definite matrix with its Cholesky factor and smallest eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdCertificate {
    matrix: SymMatrix,
    factor: Matrix,
    lambda_min: f64,
}

impl SpdCertificate {
    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    /// Lower-triangular `L` with `L Lᵀ = matrix`.
    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Solves `matrix · y = b`.
    pub fn solve(&self, b: &[f64]) -> Vector {
        let n = self.factor.dim;
        let l = &self.factor;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l.get(i, k) * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l.get(k, i) * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        Vector(y)
    }
}

/// Cholesky-factorizes `m` and computes its smallest eigenvalue.
pub fn spd_factorize(m: &SymMatrix) -> Result<SpdCertificate> {
    let n = m.dim();
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix", "entries must be finite"));
    }
    let largest_diag = (0..n).map(|i| m.get(i, i)).fold(0.0, f64::max);
    let tolerance = PIVOT_TOLERANCE * largest_diag;

    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= l.get(j, k) * l.get(j, k);
        }
        if !(pivot > tolerance) {
            return Err(Error::NotPositiveDefinite { row: j, pivot });
        }
        let ljj = libm::sqrt(pivot);
        l.set(j, j, ljj);
        for i in j + 1..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }

    let lambda_min = symmetric_eigenvalues(m)[0];
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            row: 0,
            pivot: lambda_min,
        });
    }
    Ok(SpdCertificate {
        matrix: m.clone(),
        factor: l,
        lambda_min,
    })
}

/// Inverse of a certified SPD matrix, returned exactly symmetric.
pub fn spd_inverse(c: &SpdCertificate) -> SymMatrix {
    let n = c.factor.dim;
    let mut inv = Matrix::zeros(n);
    for j in 0..n {
        let col = c.solve(&Vector::basis(n, j));
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
    }
    SymMatrix::symmetrized(inv)
}

/// `mᵖ v` by repeated multiplication.
pub fn matrix_power_apply(m: &Matrix, p: usize, v: &[f64]) -> Vector {
    let mut out = Vector(v.to_vec());
    for _ in 0..p {
        out = m.mul_vec(&out);
    }
    out
}

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
pub fn symmetric_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let total: f64 = a.iter().map(|v| v * v).sum();
    let threshold = 1e-30 * total;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sym(rows: &[&[f64]]) -> SymMatrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        SymMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn factorize_identity() {
        let c = spd_factorize(&SymMatrix::identity(3)).unwrap();
        assert_eq!(c.factor(), &Matrix::identity(3));
        assert!((c.lambda_min() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn factorize_diagonal() {
        let c = spd_factorize(&SymMatrix::diagonal(&[4.0, 1.0])).unwrap();
        assert_eq!(c.factor(), &Matrix::diagonal(&[2.0, 1.0]));
        assert!((c.lambda_min() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn factorize_two_by_two() {
        // characteristic polynomial (2 - l)^2 - 1 has roots 1 and 3
        let m = sym(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let c = spd_factorize(&m).unwrap();
        assert!((c.lambda_min() - 1.0).abs() < 1e-12);
        let eig = symmetric_eigenvalues(&m);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_is_rejected() {
        let m = sym(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(
            spd_factorize(&m),
            Err(Error::NotPositiveDefinite { row: 1, .. })
        ));
        let neg = SymMatrix::diagonal(&[1.0, -2.0]);
        assert!(spd_factorize(&neg).is_err());
    }

    #[test]
    fn asymmetric_rows_are_rejected() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn inverse_examples() {
        let id = spd_inverse(&spd_factorize(&SymMatrix::identity(3)).unwrap());
        assert!(id.max_abs_diff(&Matrix::identity(3)) < 1e-15);

        let d = spd_inverse(&spd_factorize(&SymMatrix::diagonal(&[4.0, 0.25])).unwrap());
        assert!(d.max_abs_diff(&Matrix::diagonal(&[0.25, 4.0])) < 1e-15);

        let m = sym(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let inv = spd_inverse(&spd_factorize(&m).unwrap());
        let expected = Matrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]])
            .unwrap()
            .scaled(1.0 / 3.0);
        assert!(inv.max_abs_diff(&expected) < 1e-15);
        assert!(inv.is_symmetric());
    }

    #[test]
    fn power_apply_examples() {
        let m = Matrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 5.0]]).unwrap();
        assert_eq!(matrix_power_apply(&m, 0, &[1.0, -2.0]).as_slice(), &[1.0, -2.0]);

        let half = Matrix::diagonal(&[0.5, 0.5]);
        assert_eq!(
            matrix_power_apply(&half, 3, &[1.0, 1.0]).as_slice(),
            &[0.125, 0.125]
        );

        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(matrix_power_apply(&swap, 2, &[1.0, 2.0]).as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn op_norm_of_rotation_and_scaling() {
        let rot = Matrix::from_rows(&[vec![0.0, -2.0], vec![2.0, 0.0]]).unwrap();
        assert!((rot.op_norm() - 2.0).abs() < 1e-12);
        assert!((Matrix::diagonal(&[-3.0, 1.0]).op_norm() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_matches_inverse() {
        let m = sym(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 2.0]]);
        let c = spd_factorize(&m).unwrap();
        let b = [1.0, -1.0, 2.0];
        let x = c.solve(&b);
        let back = m.mul_vec(&x);
        assert!(back.max_abs_diff(&b) < 1e-12);
    }
}
