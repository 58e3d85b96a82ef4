//! Dense symmetric matrices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// A dense real symmetric matrix.
///
/// Symmetry is exact: every constructor averages the input with its
/// transpose, so `get(i, j) == get(j, i)` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds a matrix from the full row-major entry list.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self::symmetrized(DMatrix::from_row_slice(dim, dim, entries)))
    }

    /// Wraps a square matrix, averaging it with its transpose.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { inner: m }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "SymMatrix dimension must be positive");
        Self { inner: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "SymMatrix dimension must be positive");
        Self { inner: DMatrix::identity(dim, dim) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "SymMatrix dimension must be positive");
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        Self { inner: m }
    }

    /// `scale · v vᵀ`
    pub fn outer(v: &[f64], scale: f64) -> Self {
        assert!(!v.is_empty(), "SymMatrix dimension must be positive");
        let n = v.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x = scale * v[i] * v[j];
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        Self { inner: m }
    }

    /// The indicator `e_i e_iᵀ` of coordinate `index`.
    pub fn coordinate_indicator(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut m = Self::zeros(dim);
        m.inner[(index, index)] = 1.0;
        m
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { inner: &self.inner * c }
    }

    /// `self + c · other`
    pub fn add_scaled(&self, other: &SymMatrix, c: f64) -> Result<Self> {
        check_dims(self, other)?;
        let mut m = self.inner.clone();
        m.zip_apply(&other.inner, |a, b| *a += c * b);
        Ok(Self { inner: m })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    /// Adds `delta` to entry `(i, i)` in place.
    pub(crate) fn add_to_diagonal(&mut self, i: usize, delta: f64) {
        self.inner[(i, i)] += delta;
    }

    pub fn eigen(&self) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(SymmetricEigen::new(self.inner.clone()))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigen()?.eigenvalues.min())
    }

    /// Eigenvalue slack used for PSD checks: `rel · (1 + ‖self‖_F)`.
    pub fn eig_tol(&self, rel: f64) -> f64 {
        rel * (1.0 + self.frobenius_norm())
    }

    /// PSD up to `rel · (1 + ‖self‖_F)`.
    pub fn is_psd(&self, rel: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -self.eig_tol(rel))
    }
}

pub(crate) fn check_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Frobenius inner product `Σᵢⱼ aᵢⱼ bᵢⱼ`.
pub fn frobenius_inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.inner.dot(&b.inner))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_symmetrizes_exactly() {
        let m = SymMatrix::from_row_major(2, &[1.0, 0.3, 0.1, 2.0]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
        assert_eq!(m.get(0, 1), 0.2);
    }

    #[test]
    fn symmetric_input_is_preserved_bitwise() {
        let entries = [1.0, 0.1 + 0.2, 0.1 + 0.2, -7.25e-300];
        let m = SymMatrix::from_row_major(2, &entries).unwrap();
        assert_eq!(m.to_row_major(), entries);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SymMatrix::from_row_major(0, &[]).is_err());
        assert!(SymMatrix::from_row_major(2, &[1.0, 2.0, 3.0]).is_err());
        assert!(SymMatrix::from_matrix(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let i2 = SymMatrix::identity(2);
        assert_eq!(frobenius_inner(&i2, &i2).unwrap(), 2.0);
        let a = SymMatrix::from_diagonal(&[1.0, 2.0]);
        let b = SymMatrix::from_diagonal(&[3.0, 4.0]);
        assert_eq!(frobenius_inner(&a, &b).unwrap(), 11.0);
        let c = SymMatrix::from_row_major(2, &[1.5, -2.0, -2.0, 9.0]).unwrap();
        assert_eq!(frobenius_inner(&c, &SymMatrix::zeros(2)).unwrap(), 0.0);
        assert_eq!(
            frobenius_inner(&a, &c).unwrap(),
            frobenius_inner(&c, &a).unwrap()
        );
    }

    #[test]
    fn inner_product_dimension_mismatch() {
        let err = frobenius_inner(&SymMatrix::identity(2), &SymMatrix::identity(3));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
