//! Parameter triples of the matrix-variate model and their prepared
//! factorizations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{check_symmetric, CholFactor};

/// A `(mean, row covariance, column covariance)` triple.
///
/// The covariance pair is only identified up to a scalar rebalancing
/// `(κ Σ_row, Σ_col / κ)`; [`ParamSet::normalized`] pins the first diagonal
/// entry of the column covariance to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    mean: DMatrix<f64>,
    sigma_row: DMatrix<f64>,
    sigma_col: DMatrix<f64>,
}

impl ParamSet {
    /// Validate symmetry (1e-12 relative) and positive definiteness of both
    /// covariance factors, and shape conformity with the mean.
    pub fn new(
        mean: DMatrix<f64>,
        sigma_row: DMatrix<f64>,
        sigma_col: DMatrix<f64>,
    ) -> Result<Self> {
        if sigma_row.nrows() != mean.nrows() || sigma_col.nrows() != mean.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!(
                    "row covariance {p}x{p}, column covariance {q}x{q}",
                    p = mean.nrows(),
                    q = mean.ncols()
                ),
                actual: format!(
                    "{}x{} and {}x{}",
                    sigma_row.nrows(),
                    sigma_row.ncols(),
                    sigma_col.nrows(),
                    sigma_col.ncols()
                ),
            });
        }
        check_symmetric(&sigma_row)?;
        check_symmetric(&sigma_col)?;
        CholFactor::new(&sigma_row)?;
        CholFactor::new(&sigma_col)?;
        Ok(Self {
            mean,
            sigma_row,
            sigma_col,
        })
    }

    pub fn mean(&self) -> &DMatrix<f64> {
        &self.mean
    }

    pub fn sigma_row(&self) -> &DMatrix<f64> {
        &self.sigma_row
    }

    pub fn sigma_col(&self) -> &DMatrix<f64> {
        &self.sigma_col
    }

    /// Row dimension `p`.
    pub fn p(&self) -> usize {
        self.mean.nrows()
    }

    /// Column dimension `q`.
    pub fn q(&self) -> usize {
        self.mean.ncols()
    }

    /// Rebalance the covariance pair so the first diagonal entry of the
    /// column covariance equals one exactly. The Kronecker product, distances
    /// and densities are unchanged.
    pub fn normalized(&self) -> ParamSet {
        let s = self.sigma_col[(0, 0)];
        let mut sigma_col = &self.sigma_col / s;
        sigma_col[(0, 0)] = 1.0;
        ParamSet {
            mean: self.mean.clone(),
            sigma_row: &self.sigma_row * s,
            sigma_col,
        }
    }

    /// Rescale the row covariance in place by a positive factor.
    pub(crate) fn scale_sigma_row(&mut self, factor: f64) {
        self.sigma_row *= factor;
    }

    /// Prepared factorizations for repeated distance and density evaluation.
    pub fn precision(&self) -> Result<Precision> {
        Precision::new(self)
    }
}

/// Cholesky factors of a [`ParamSet`]'s covariance pair, prepared once and
/// reused across many distance evaluations.
#[derive(Debug, Clone)]
pub struct Precision {
    mean: DMatrix<f64>,
    chol_row: CholFactor,
    chol_col: CholFactor,
}

impl Precision {
    pub fn new(params: &ParamSet) -> Result<Self> {
        Ok(Self {
            mean: params.mean.clone(),
            chol_row: CholFactor::new(&params.sigma_row)?,
            chol_col: CholFactor::new(&params.sigma_col)?,
        })
    }

    pub fn p(&self) -> usize {
        self.mean.nrows()
    }

    pub fn q(&self) -> usize {
        self.mean.ncols()
    }

    pub fn mean(&self) -> &DMatrix<f64> {
        &self.mean
    }

    /// `p ln det Σ_col + q ln det Σ_row`.
    pub fn log_det_objective(&self) -> f64 {
        self.p() as f64 * self.chol_col.log_det() + self.q() as f64 * self.chol_row.log_det()
    }

    pub fn log_det_sigma_row(&self) -> f64 {
        self.chol_row.log_det()
    }

    pub fn log_det_sigma_col(&self) -> f64 {
        self.chol_col.log_det()
    }

    /// Row precision matrix `(Σ_row)^{-1}`.
    pub fn omega_row(&self) -> DMatrix<f64> {
        self.chol_row.inverse()
    }

    /// Column precision matrix `(Σ_col)^{-1}`.
    pub fn omega_col(&self) -> DMatrix<f64> {
        self.chol_col.inverse()
    }

    /// Squared matrix Mahalanobis distance of `x`.
    ///
    /// Evaluated as `||L_r^{-1} (X - M) L_c^{-T}||_F^2`, which is exactly
    /// `tr(Ω_col (X - M)' Ω_row (X - M))` and nonnegative by construction.
    pub fn mmd_squared(&self, x: &DMatrix<f64>) -> Result<f64> {
        if x.nrows() != self.p() || x.ncols() != self.q() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.p(), self.q()),
                actual: format!("{}x{}", x.nrows(), x.ncols()),
            });
        }
        let mut w = x - &self.mean;
        // w <- L_r^{-1} (X - M), then transpose and apply L_c^{-1}.
        self.chol_row.solve_lower_in_place(&mut w);
        let mut wt = w.transpose();
        self.chol_col.solve_lower_in_place(&mut wt);
        Ok(wt.iter().map(|v| v * v).sum())
    }
}
