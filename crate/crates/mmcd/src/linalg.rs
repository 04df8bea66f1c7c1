//! Symmetric factorization helpers shared by the estimators.
//!
//! Positive definiteness is decided by Cholesky factorization with a pivot
//! threshold of `1e-12` times the largest diagonal entry of the input, so the
//! test is invariant to the overall scale of the matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative pivot threshold for the positive definiteness test.
const PIVOT_REL_TOL: f64 = 1e-12;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct CholFactor {
    lower: DMatrix<f64>,
}

impl CholFactor {
    /// Factor `a = L L'`, reading only the lower triangle of `a`.
    ///
    /// Fails with [`Error::NotPositiveDefinite`] when a pivot drops below
    /// `1e-12` times the largest diagonal entry of `a`.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n}"),
                actual: format!("{}x{}", a.nrows(), a.ncols()),
            });
        }
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
        let threshold = PIVOT_REL_TOL * max_diag.max(f64::MIN_POSITIVE);

        let mut l = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut pivot = a[(j, j)];
            for k in 0..j {
                pivot -= l[(j, k)] * l[(j, k)];
            }
            if !(pivot > threshold) || !pivot.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot, index: j });
            }
            let ljj = pivot.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// ln det of the factored matrix, `2 Σ ln L_ii`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>() * 2.0
    }

    /// Solve `L x = b` in place for each column of `b`.
    pub fn solve_lower_in_place(&self, b: &mut DMatrix<f64>) {
        let n = self.dim();
        for col in 0..b.ncols() {
            for i in 0..n {
                let mut s = b[(i, col)];
                for k in 0..i {
                    s -= self.lower[(i, k)] * b[(k, col)];
                }
                b[(i, col)] = s / self.lower[(i, i)];
            }
        }
    }

    /// Inverse of the factored matrix, `(L L')^{-1}`.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        // L^{-1} by forward substitution against the identity, then Ω = L^{-T} L^{-1}.
        let mut linv = DMatrix::identity(n, n);
        self.solve_lower_in_place(&mut linv);
        linv.transpose() * linv
    }
}

/// Check symmetry to within `1e-12` relative to the largest magnitude entry.
pub fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{n}x{n}"),
            actual: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if max_asym > 1e-12 * scale {
        return Err(Error::NotSymmetric {
            max_asymmetry: max_asym / scale,
        });
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix, sorted descending.
pub fn symmetric_eigenvalues_desc(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_spd_and_matches_nalgebra_logdet() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = CholFactor::new(&a).unwrap();
        let rebuilt = f.lower() * f.lower().transpose();
        assert!((&rebuilt - &a).abs().max() < 1e-12);
        let det = a.determinant();
        assert!((f.log_det() - det.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            CholFactor::new(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn pivot_threshold_scales_with_matrix() {
        // Nearly singular relative to its own scale: rank-1 plus a tiny ridge.
        let mut a = DMatrix::from_row_slice(2, 2, &[1e8, 1e8, 1e8, 1e8]);
        a[(1, 1)] += 1e-6;
        assert!(CholFactor::new(&a).is_err());
        // The same matrix with a visible ridge is accepted.
        a[(0, 0)] += 1.0;
        a[(1, 1)] += 1.0;
        assert!(CholFactor::new(&a).is_ok());
    }

    #[test]
    fn inverse_matches_direct() {
        let a = DMatrix::from_row_slice(3, 3, &[5.0, 1.0, 0.3, 1.0, 4.0, 0.7, 0.3, 0.7, 3.0]);
        let inv = CholFactor::new(&a).unwrap().inverse();
        let eye = &a * &inv;
        assert!((&eye - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn symmetry_check_is_relative() {
        let a = DMatrix::from_row_slice(2, 2, &[1e9, 1.0, 1.0 + 1e-5, 1e9]);
        assert!(check_symmetric(&a).is_ok());
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0 + 1e-5, 1.0]);
        assert!(check_symmetric(&b).is_err());
    }
}
