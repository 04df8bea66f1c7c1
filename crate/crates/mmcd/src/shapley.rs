//! Outlier flagging from squared distances and Shapley-value decomposition
//! of a squared matrix Mahalanobis distance into cell, row and column
//! contributions.
//!
//! The cellwise decomposition has the closed form
//! `Φ(X) = (X - M) ∘ (Ω_row (X - M) Ω_col)`; rowwise and columnwise values
//! are its margins, equal to the diagonal forms
//! `diag(Ω_row (X - M) Ω_col (X - M)')` and
//! `diag((X - M)' Ω_row (X - M) Ω_col)`.

use nalgebra::DMatrix;

use crate::chi2::chi2_quantile;
use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::stack::MatrixStack;

/// Additive decomposition of one observation's squared distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyReport {
    /// Cellwise contributions, a `p x q` matrix summing to `total`.
    pub cell: DMatrix<f64>,
    /// Rowwise contributions (row sums of `cell`).
    pub row: Vec<f64>,
    /// Columnwise contributions (column sums of `cell`).
    pub col: Vec<f64>,
    /// The squared matrix Mahalanobis distance being decomposed.
    pub total: f64,
}

/// Outlier flags from squared distances against a chi-square cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub distances: Vec<f64>,
    pub cutoff: f64,
    /// `flags[i] = distances[i] > cutoff`.
    pub flags: Vec<bool>,
}

impl DetectionResult {
    pub fn n_flagged(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

/// Flag observations whose squared distance exceeds the chi-square quantile
/// with `p q` degrees of freedom.
pub fn detect(stack: &MatrixStack, params: &ParamSet, quantile: f64) -> Result<DetectionResult> {
    if !(0.0 < quantile && quantile < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "detection quantile must lie strictly between 0 and 1, got {quantile}"
        )));
    }
    let precision = params.precision()?;
    let cutoff = chi2_quantile(quantile, stack.p() * stack.q())?;
    let distances: Vec<f64> = stack
        .iter()
        .map(|x| precision.mmd_squared(x))
        .collect::<Result<_>>()?;
    let flags = distances.iter().map(|&d| d > cutoff).collect();
    Ok(DetectionResult {
        distances,
        cutoff,
        flags,
    })
}

fn phi_cell(deviation: &DMatrix<f64>, omega_row: &DMatrix<f64>, omega_col: &DMatrix<f64>) -> DMatrix<f64> {
    let weighted = omega_row * deviation * omega_col;
    deviation.component_mul(&weighted)
}

/// Cell, row and column Shapley values of `x` under `params`.
pub fn shapley(x: &DMatrix<f64>, params: &ParamSet) -> Result<ShapleyReport> {
    let (p, q) = (params.p(), params.q());
    if x.nrows() != p || x.ncols() != q {
        return Err(Error::ShapeMismatch {
            expected: format!("{p}x{q}"),
            actual: format!("{}x{}", x.nrows(), x.ncols()),
        });
    }
    let precision = params.precision()?;
    let omega_row = precision.omega_row();
    let omega_col = precision.omega_col();
    let deviation = x - params.mean();
    let cell = phi_cell(&deviation, &omega_row, &omega_col);

    // Diagonal closed forms for the margins.
    let m_row = &omega_row * &deviation * &omega_col * deviation.transpose();
    let m_col = deviation.transpose() * &omega_row * &deviation * &omega_col;
    let row: Vec<f64> = (0..p).map(|j| m_row[(j, j)]).collect();
    let col: Vec<f64> = (0..q).map(|k| m_col[(k, k)]).collect();

    // The margins agree with the cell sums to 1e-10.
    for (j, r) in row.iter().enumerate() {
        let s: f64 = (0..q).map(|k| cell[(j, k)]).sum();
        debug_assert!(
            (r - s).abs() <= 1e-10 * (1.0 + s.abs()),
            "rowwise margin mismatch at {j}: {r} vs {s}"
        );
    }
    for (k, c) in col.iter().enumerate() {
        let s: f64 = (0..p).map(|j| cell[(j, k)]).sum();
        debug_assert!(
            (c - s).abs() <= 1e-10 * (1.0 + s.abs()),
            "columnwise margin mismatch at {k}: {c} vs {s}"
        );
    }

    let total = cell.iter().sum();
    Ok(ShapleyReport { cell, row, col, total })
}

/// Supported transformation classes of the invariance checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformClass {
    Diagonal,
    Permutation,
}

fn classify(m: &DMatrix<f64>) -> Result<TransformClass> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidConfig(
            "transformation matrices must be square".into(),
        ));
    }
    let diagonal = (0..n).all(|i| {
        (0..n).all(|j| (i == j && m[(i, j)] != 0.0) || (i != j && m[(i, j)] == 0.0))
    });
    if diagonal {
        return Ok(TransformClass::Diagonal);
    }
    let permutation = (0..n).all(|i| {
        m.row(i).iter().filter(|v| **v == 1.0).count() == 1
            && m.row(i).iter().filter(|v| **v == 0.0).count() == n - 1
    }) && (0..n).all(|j| m.column(j).iter().filter(|v| **v == 1.0).count() == 1);
    if permutation {
        return Ok(TransformClass::Permutation);
    }
    Err(Error::InvalidConfig(
        "transformation must be a nonsingular diagonal matrix or a permutation matrix".into(),
    ))
}

/// Deviations observed by the invariance checks.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub a_class: TransformClass,
    pub b_class: TransformClass,
    /// Max absolute deviation of `Φ(X + C; M + C)` from `Φ(X)`.
    pub shift_deviation: f64,
    /// Max absolute deviation of `Φ(A X B)` from the expected image of
    /// `Φ(X)`: unchanged for diagonal factors, permuted for permutations.
    pub transform_deviation: f64,
}

/// Check shift invariance, scale invariance and permutation equivariance of
/// the cellwise decomposition for the given transformation triple.
///
/// `a` and `b` must each be a nonsingular diagonal matrix or a permutation
/// matrix; `c` is an arbitrary shift. The transformed precisions are formed
/// by the exact transformation laws (entry rescaling or row/column
/// movement), so the reported deviations isolate the decomposition itself.
pub fn shapley_invariance_suite(
    x: &DMatrix<f64>,
    params: &ParamSet,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<InvarianceReport> {
    let (p, q) = (params.p(), params.q());
    if a.nrows() != p || b.nrows() != q || c.nrows() != p || c.ncols() != q {
        return Err(Error::ShapeMismatch {
            expected: format!("a: {p}x{p}, b: {q}x{q}, c: {p}x{q}"),
            actual: format!(
                "a: {}x{}, b: {}x{}, c: {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            ),
        });
    }
    let a_class = classify(a)?;
    let b_class = classify(b)?;

    let precision = params.precision()?;
    let omega_row = precision.omega_row();
    let omega_col = precision.omega_col();
    let deviation = x - params.mean();
    let base = phi_cell(&deviation, &omega_row, &omega_col);

    // (a) Shift: both the observation and the mean move by c.
    let shifted_dev = (x + c) - (params.mean() + c);
    let shifted = phi_cell(&shifted_dev, &omega_row, &omega_col);
    let shift_deviation = (&shifted - &base).abs().max();

    // (b)/(c) Scale or permutation: transform the observation, the mean and
    // the precisions by the exact laws for the class.
    let omega_row_t = match a_class {
        // Σ' = A Σ A with diagonal A, so Ω' = A^{-1} Ω A^{-1}.
        TransformClass::Diagonal => {
            DMatrix::from_fn(p, p, |i, j| omega_row[(i, j)] / (a[(i, i)] * a[(j, j)]))
        }
        // Σ' = P Σ P', so Ω' = P Ω P': pure entry movement.
        TransformClass::Permutation => a * &omega_row * a.transpose(),
    };
    let omega_col_t = match b_class {
        // Σ' = B' Σ B = B Σ B with diagonal B.
        TransformClass::Diagonal => {
            DMatrix::from_fn(q, q, |i, j| omega_col[(i, j)] / (b[(i, i)] * b[(j, j)]))
        }
        // Σ' = Q' Σ Q, so Ω' = Q' Ω Q.
        TransformClass::Permutation => b.transpose() * &omega_col * b,
    };
    let transformed_dev = a * x * b - a * params.mean() * b;
    let transformed = phi_cell(&transformed_dev, &omega_row_t, &omega_col_t);
    let expected = match (a_class, b_class) {
        (TransformClass::Diagonal, TransformClass::Diagonal) => base.clone(),
        (TransformClass::Permutation, TransformClass::Diagonal) => a * &base,
        (TransformClass::Diagonal, TransformClass::Permutation) => &base * b,
        (TransformClass::Permutation, TransformClass::Permutation) => a * &base * b,
    };
    let transform_deviation = (&transformed - &expected).abs().max();

    Ok(InvarianceReport {
        a_class,
        b_class,
        shift_deviation,
        transform_deviation,
    })
}
