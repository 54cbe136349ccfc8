//! Symmetric positive-definite matrices and the few dense-matrix helpers the
//! rest of the crate needs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated by [`SpdMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric positive-definite matrix, e.g. a covariance or `∇²Λ(ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    /// Validates symmetry (to `1e-12` relative) and positive definiteness.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite entry".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Self::from_symmetric(m)
    }

    /// Symmetrizes `m` by averaging with its transpose, then checks
    /// positive definiteness. Used for matrices assembled by computation,
    /// where asymmetry is rounding only.
    pub fn from_symmetric(m: DMatrix<f64>) -> Result<Self> {
        let sym = (&m + m.transpose()) * 0.5;
        if sym.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite entry".into()));
        }
        if sym.clone().cholesky().is_none() {
            let min = SymmetricEigen::new(sym).eigenvalues.min();
            return Err(Error::NotPositiveDefinite(format!(
                "smallest eigenvalue {min:e}"
            )));
        }
        Ok(Self(sym))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `u·Mv`.
    pub fn bilinear(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.0 * v))
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        SymmetricEigen::new(self.0.clone()).eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().min()
    }

    pub fn condition_number(&self) -> f64 {
        let ev = self.eigenvalues();
        ev.max() / ev.min()
    }

    pub fn log_det(&self) -> f64 {
        let chol = self.0.clone().cholesky().expect("validated at construction");
        2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn det(&self) -> f64 {
        self.log_det().exp()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let inv = self
            .0
            .clone()
            .cholesky()
            .expect("validated at construction")
            .inverse();
        (&inv + inv.transpose()) * 0.5
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.0
            .clone()
            .cholesky()
            .expect("validated at construction")
            .solve(b)
    }

    /// Symmetric inverse square root `M^{-1/2}` through the eigendecomposition.
    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(self.0.clone());
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let m = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        (&m + m.transpose()) * 0.5
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &DMatrix<f64>) -> f64 {
        (&self.0 - other).amax()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SpdMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SpdMatrix::new(matrix_from_rows(&rows)?)
    }
}

impl From<SpdMatrix> for Vec<Vec<f64>> {
    fn from(m: SpdMatrix) -> Self {
        matrix_to_rows(&m.0)
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(SpdMatrix::new(asym).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            SpdMatrix::new(indef),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn inverse_square_root_whitens() {
        let m = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0])).unwrap();
        let w = m.inv_sqrt();
        let white = &w * m.as_matrix() * &w;
        assert_abs_diff_eq!(white, DMatrix::identity(2, 2), epsilon = 1e-12);
        assert_abs_diff_eq!(m.log_det(), 11f64.ln(), epsilon = 1e-12);
    }
}
