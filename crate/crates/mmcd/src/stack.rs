//! Ordered collections of equally shaped matrix observations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// An ordered sample of `n` real `p x q` observation matrices.
///
/// Construction validates that all matrices share the same shape and that
/// every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixStack {
    p: usize,
    q: usize,
    data: Vec<DMatrix<f64>>,
}

impl MatrixStack {
    pub fn new(data: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = data.first().ok_or_else(|| {
            Error::InvalidConfig("a matrix stack needs at least one observation".into())
        })?;
        let (p, q) = (first.nrows(), first.ncols());
        if p == 0 || q == 0 {
            return Err(Error::InvalidConfig(
                "observation matrices must have at least one row and one column".into(),
            ));
        }
        for (idx, m) in data.iter().enumerate() {
            if m.nrows() != p || m.ncols() != q {
                return Err(Error::ShapeMismatch {
                    expected: format!("{p}x{q}"),
                    actual: format!("{}x{} at observation {idx}", m.nrows(), m.ncols()),
                });
            }
            for j in 0..q {
                for i in 0..p {
                    if !m[(i, j)].is_finite() {
                        return Err(Error::NonFinite {
                            observation: idx,
                            row: i,
                            col: j,
                        });
                    }
                }
            }
        }
        Ok(Self { p, q, data })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.data.len()
    }

    /// Row dimension of each observation.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Column dimension of each observation.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, i: usize) -> &DMatrix<f64> {
        &self.data[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        self.data.iter()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.data
    }

    /// Mean matrix over the given observation indices.
    pub fn subset_mean(&self, subset: &[usize]) -> DMatrix<f64> {
        let mut mean = DMatrix::zeros(self.p, self.q);
        for &i in subset {
            mean += &self.data[i];
        }
        mean / subset.len() as f64
    }

    /// Explicit column-stacking vectorization of one observation.
    pub fn vec_observation(&self, i: usize) -> DVector<f64> {
        vec_column_stacked(&self.data[i])
    }

    /// Reshape every observation to a `pq x 1` matrix by column stacking.
    ///
    /// This realizes the classical vector-variate view of the sample: with
    /// column dimension one, the estimators in this crate reduce to their
    /// multivariate counterparts.
    pub fn vectorized(&self) -> MatrixStack {
        let data = self
            .data
            .iter()
            .map(|m| DMatrix::from_column_slice(self.p * self.q, 1, vec_column_stacked(m).as_slice()))
            .collect();
        MatrixStack::new(data).expect("vectorized stack inherits validity")
    }
}

/// Column-stacking vec operator: entry `(i, j)` maps to position `i + j p`.
pub fn vec_column_stacked(m: &DMatrix<f64>) -> DVector<f64> {
    let (p, q) = (m.nrows(), m.ncols());
    let mut v = DVector::zeros(p * q);
    for j in 0..q {
        for i in 0..p {
            v[i + j * p] = m[(i, j)];
        }
    }
    v
}
