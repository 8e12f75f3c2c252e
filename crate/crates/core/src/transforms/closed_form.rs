//! Least squares, orthogonal Procrustes and CCA mappings.

use nalgebra::{DMatrix, DVector};

use super::{check_shapes, residual, AlignmentMatrix, FitReport, Method, TransformError};
use crate::linalg;

/// Ridge added to `XᵀX` (least squares) or to each covariance (CCA).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Ridge {
    /// Never regularize; rank deficiency is an error.
    None,
    /// Solve unregularized when the problem has full rank, otherwise add
    /// `1e-8 × trace(C) / d` to the diagonal of the offending matrix `C`.
    #[default]
    Auto,
    /// Always add this value to the diagonal.
    Fixed(f64),
}

const AUTO_RIDGE_SCALE: f64 = 1e-8;
const CCA_PINV_CUTOFF: f64 = 1e-10;

impl Ridge {
    fn validate(self) -> Result<(), TransformError> {
        match self {
            Ridge::Fixed(e) if !(e.is_finite() && e >= 0.0) => {
                Err(TransformError::InvalidConfig(format!("ridge must be >= 0, got {e}")))
            }
            _ => Ok(()),
        }
    }
}

fn auto_ridge(trace: f64, d: usize) -> f64 {
    AUTO_RIDGE_SCALE * trace / d as f64
}

/// `T = (XᵀX + εI)⁻¹ XᵀY`, solved through the SVD of `X`.
pub fn fit_least_squares(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    ridge: Ridge,
) -> Result<AlignmentMatrix, TransformError> {
    check_shapes(x, y)?;
    ridge.validate()?;
    let (m, d) = x.shape();
    let svd = linalg::svd(x).ok_or(TransformError::SvdFailed)?;
    let (u, v_t, s) = (&svd.u, &svd.v_t, &svd.singular_values);

    let tol = linalg::rank_tolerance(s.max(), m, d);
    let rank = s.iter().filter(|&&v| v > tol).count();
    let eps = match ridge {
        Ridge::Fixed(e) => e,
        _ if rank == d => 0.0,
        Ridge::Auto => auto_ridge(x.norm_squared(), d),
        Ridge::None => return Err(TransformError::RankDeficient("XᵀX")),
    };

    // T = V diag(s / (s² + ε)) Uᵀ Y
    let uty = u.transpose() * y;
    let mut t = DMatrix::zeros(d, d);
    for k in 0..s.len() {
        let sigma = s[k];
        let factor = if eps > 0.0 {
            sigma / (sigma * sigma + eps)
        } else if sigma > tol {
            1.0 / sigma
        } else {
            0.0
        };
        if factor != 0.0 {
            t += v_t.row(k).transpose() * uty.row(k) * factor;
        }
    }
    let report = FitReport {
        residual: Some(residual(x, y, &t)),
        ridge: eps,
        ..FitReport::default()
    };
    Ok(AlignmentMatrix::with_report(Method::LeastSquares, t, report))
}

/// Orthogonal Procrustes: with `YᵀX = U Σ Vᵀ`, `T = V Uᵀ`.
pub fn fit_orthogonal(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<AlignmentMatrix, TransformError> {
    check_shapes(x, y)?;
    let t = procrustes(x, y)?;
    let report = FitReport {
        residual: Some(residual(x, y, &t)),
        ..FitReport::default()
    };
    Ok(AlignmentMatrix::with_report(Method::Orthogonal, t, report))
}

pub(crate) fn procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>, TransformError> {
    let linalg::Svd { u, v_t, .. } = linalg::svd(&(y.transpose() * x)).ok_or(TransformError::SvdFailed)?;
    Ok(v_t.transpose() * u.transpose())
}

/// Canonical correlation analysis mapping `T = Cˣ (Cʸ)⁺`.
///
/// Columns of both matrices are centered over the `m` rows. Canonical
/// directions come from the SVD of the whitened cross-covariance
/// `Σxx^{-1/2} Σxy Σyy^{-1/2}`, so the projections `X Cˣ` (and `Y Cʸ`) are
/// mutually orthogonal.
pub fn fit_cca(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    ridge: Ridge,
) -> Result<AlignmentMatrix, TransformError> {
    check_shapes(x, y)?;
    ridge.validate()?;
    let (m, d) = x.shape();
    let xc = center_columns(x);
    let yc = center_columns(y);
    let cxx = xc.transpose() * &xc;
    let cyy = yc.transpose() * &yc;
    let cxy = xc.transpose() * &yc;

    let whiten = |cov: &DMatrix<f64>| -> Result<(DMatrix<f64>, f64), TransformError> {
        let eps = match ridge {
            Ridge::Fixed(e) => e,
            _ => 0.0,
        };
        let (w, usable) = linalg::inverse_sqrt_psd(cov, eps, m);
        if usable == d {
            return Ok((w, eps));
        }
        match ridge {
            Ridge::Auto => {
                let eps = auto_ridge(cov.trace(), d);
                let (w, usable) = linalg::inverse_sqrt_psd(cov, eps, m);
                if usable == d {
                    Ok((w, eps))
                } else {
                    Err(TransformError::InsufficientDirections { usable, dim: d })
                }
            }
            _ => Err(TransformError::InsufficientDirections { usable, dim: d }),
        }
    };
    let (wx, ridge_x) = whiten(&cxx)?;
    let (wy, ridge_y) = whiten(&cyy)?;

    let svd = linalg::svd(&(&wx * &cxy * &wy)).ok_or(TransformError::SvdFailed)?;
    let (u, v_t) = (&svd.u, &svd.v_t);
    let correlations: Vec<f64> = svd.singular_values.iter().copied().collect();

    let dirs_x = &wx * u;
    let dirs_y = &wy * v_t.transpose();
    let inv_y = linalg::pseudo_inverse(&dirs_y, CCA_PINV_CUTOFF).ok_or(TransformError::SvdFailed)?;
    let t = dirs_x * inv_y;
    let report = FitReport {
        residual: Some(residual(x, y, &t)),
        ridge: ridge_x.max(ridge_y),
        canonical_correlations: correlations,
        ..FitReport::default()
    };
    Ok(AlignmentMatrix::with_report(Method::Cca, t, report))
}

fn center_columns(a: &DMatrix<f64>) -> DMatrix<f64> {
    let means: DVector<f64> = a.row_mean().transpose();
    let mut out = a.clone();
    for mut row in out.row_iter_mut() {
        row -= means.transpose();
    }
    out
}
