//! Dense Cholesky helpers shared by the GP and the Gibbs sampler.

use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::{Mat, MatMut, MatRef, Par, Side};

use crate::error::{Error, Result};

/// Diagonal jitter tried, in order, after a plain factorization fails.
pub const JITTER_LADDER: [f64; 4] = [1e-10, 1e-8, 1e-6, 1e-4];

/// Lower Cholesky factor of `K + (σ² + jitter) I`.
#[derive(Clone, Debug)]
pub struct Factor {
    lower: Mat<f64>,
    jitter: f64,
}

impl Factor {
    /// Factorize `k + noise_var·I`, reading only the lower triangle of `k`.
    ///
    /// Escalates through [`JITTER_LADDER`] when the matrix is not numerically
    /// positive definite.
    pub fn new(k: MatRef<'_, f64>, noise_var: f64) -> Result<Self> {
        let n = k.nrows();
        let mut last = 0.0;
        for jitter in std::iter::once(0.0).chain(JITTER_LADDER) {
            last = jitter;
            let shifted = Mat::from_fn(n, n, |i, j| {
                if i == j {
                    k[(i, i)] + noise_var + jitter
                } else if i > j {
                    k[(i, j)]
                } else {
                    0.0
                }
            });
            if let Ok(llt) = shifted.llt(Side::Lower) {
                let lower = llt.L().to_owned();
                if lower.col_iter().enumerate().all(|(i, c)| c[i].is_finite() && c[i] > 0.0) {
                    return Ok(Self { lower, jitter });
                }
            }
        }
        Err(Error::Numerical {
            msg: format!("Cholesky of {n}x{n} covariance failed"),
            jitter: last,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Extra diagonal jitter that was needed (0 when none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lower(&self) -> MatRef<'_, f64> {
        self.lower.as_ref()
    }

    /// log-determinant of the factorized matrix.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>()
    }

    /// Solve `L x = b` in place for every column of `rhs`.
    pub fn forward_in_place(&self, rhs: MatMut<'_, f64>) {
        solve_lower_triangular_in_place(self.lower.as_ref(), rhs, Par::Seq);
    }

    /// Solve `(L Lᵀ) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        solve_lower_triangular_in_place(self.lower.as_ref(), rhs.as_mut(), Par::Seq);
        solve_upper_triangular_in_place(self.lower.transpose(), rhs.as_mut(), Par::Seq);
        rhs.col_as_slice(0).to_vec()
    }
}

/// Gaussian log marginal likelihood `−½(yᵀ(K+σ²I)⁻¹y + log|K+σ²I| + n log 2π)`
/// from a factorization, without the solve vector.
pub fn log_likelihood(factor: &Factor, y: &[f64]) -> f64 {
    let n = y.len();
    let mut v = Mat::from_fn(n, 1, |i, _| y[i]);
    factor.forward_in_place(v.as_mut());
    let quad: f64 = v.col_as_slice(0).iter().map(|a| a * a).sum();
    -0.5 * (quad + factor.log_det() + n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Eigenvalues below this (absolute) mean the input was not PSD up to
/// round-off and are reported as an error instead of being clamped.
pub const PSD_TOLERANCE: f64 = 1e-6;

/// Symmetric eigendecomposition with eigenvalues in `[−PSD_TOLERANCE, 0)`
/// truncated to zero. Eigenvalues are ascending; eigenvectors are columns.
pub fn clamped_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Numerical {
        msg: format!("symmetric eigendecomposition failed: {e:?}"),
        jitter: 0.0,
    })?;
    let raw = evd.S().column_vector();
    let mut values = Vec::with_capacity(raw.nrows());
    for i in 0..raw.nrows() {
        let v = raw[i];
        if !(v >= -PSD_TOLERANCE) {
            return Err(Error::Numerical {
                msg: format!("matrix is not PSD: eigenvalue {v:e}"),
                jitter: 0.0,
            });
        }
        values.push(v.max(0.0));
    }
    Ok((values, evd.U().to_owned()))
}

/// `U diag(λ) Uᵀ` after [`clamped_eigen`].
pub fn truncate_to_psd(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let (values, u) = clamped_eigen(a)?;
    let scaled = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * values[j]);
    Ok(&scaled * u.transpose())
}
