//! Thin wrappers over the dense factorizations the crate needs.
//!
//! The SVD goes through faer: nalgebra 0.35's SVD can return factors that
//! do not reconstruct rank-deficient inputs (e.g. a repeated column).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Thin SVD `A = U diag(s) Vᵀ` with `s` in descending order.
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

/// `None` for empty or non-finite input, or if the decomposition fails.
pub(crate) fn svd(matrix: &DMatrix<f64>) -> Option<Svd> {
    let (m, n) = matrix.shape();
    if m == 0 || n == 0 || matrix.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let a = faer::Mat::<f64>::from_fn(m, n, |i, j| matrix[(i, j)]);
    let f = a.thin_svd().ok()?;
    let (u, s, v) = (f.U(), f.S().column_vector(), f.V());
    let k = m.min(n);
    Some(Svd {
        u: DMatrix::from_fn(m, k, |i, j| u[(i, j)]),
        singular_values: DVector::from_fn(k, |i, _| s[i]),
        v_t: DMatrix::from_fn(k, n, |i, j| v[(j, i)]),
    })
}

/// Default numerical-rank cutoff for singular values of an `m × n` matrix.
pub(crate) fn rank_tolerance(largest: f64, m: usize, n: usize) -> f64 {
    largest * m.max(n) as f64 * f64::EPSILON
}

/// Moore-Penrose pseudo-inverse with singular values at or below
/// `rel_cutoff × σ_max` treated as zero.
pub(crate) fn pseudo_inverse(matrix: &DMatrix<f64>, rel_cutoff: f64) -> Option<DMatrix<f64>> {
    let (m, n) = matrix.shape();
    let Svd { u, singular_values: s, v_t } = svd(matrix)?;
    let cutoff = s.iter().cloned().fold(0.0, f64::max) * rel_cutoff;
    let mut out = DMatrix::zeros(n, m);
    for (k, &sigma) in s.iter().enumerate() {
        if sigma > cutoff {
            out += (v_t.row(k).transpose() * u.column(k).transpose()) / sigma;
        }
    }
    Some(out)
}

/// `C^{-1/2}` of a symmetric positive semi-definite matrix after adding
/// `ridge` to the diagonal. Returns the inverse square root and the number
/// of eigenvalues that were usable (above the rank tolerance).
pub(crate) fn inverse_sqrt_psd(cov: &DMatrix<f64>, ridge: f64, samples: usize) -> (DMatrix<f64>, usize) {
    let d = cov.nrows();
    let eig = SymmetricEigen::new(cov.clone());
    let largest = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let tol = rank_tolerance(largest, samples, d);
    let mut usable = 0;
    let mut scaled = eig.eigenvectors.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let shifted = lambda + ridge;
        let factor = if lambda > tol || (ridge > 0.0 && shifted > 0.0) {
            usable += 1;
            1.0 / shifted.sqrt()
        } else {
            0.0
        };
        scaled.column_mut(k).scale_mut(factor);
    }
    (&scaled * eig.eigenvectors.transpose(), usable)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_svd(a: &DMatrix<f64>) {
        let f = svd(a).unwrap();
        let s = &f.singular_values;
        assert!(s.iter().zip(s.iter().skip(1)).all(|(a, b)| a >= b));
        let recon = &f.u * DMatrix::from_diagonal(s) * &f.v_t;
        assert!((recon - a).norm() < 1e-12 * (1.0 + a.norm()));
        let k = s.len();
        assert!((f.u.transpose() * &f.u - DMatrix::identity(k, k)).norm() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_repeated_columns() {
        // columns 0 and 2 coincide, as for a sentence with a repeated word
        let cols: [[f64; 6]; 3] = [
            [0.31, -0.52, 0.18, 0.07, -0.44, 0.62],
            [-0.12, 0.27, 0.71, -0.38, 0.05, 0.49],
            [0.31, -0.52, 0.18, 0.07, -0.44, 0.62],
        ];
        let a = DMatrix::from_fn(6, 4, |i, j| if j < 3 { cols[j][i] } else { cols[0][i] * 0.5 + cols[1][i] });
        check_svd(&a);
        check_svd(&a.transpose());
        assert_eq!(svd(&a).unwrap().singular_values.iter().filter(|&&v| v > 1e-12).count(), 2);
        check_svd(&DMatrix::zeros(3, 2));
        assert!(svd(&DMatrix::from_element(2, 2, f64::NAN)).is_none());
    }

    #[test]
    fn pinv_of_invertible_is_inverse() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let p = pseudo_inverse(&a, 1e-10).unwrap();
        let id = &a * &p;
        assert!((id - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn pinv_drops_null_space() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let p = pseudo_inverse(&a, 1e-10).unwrap();
        assert_eq!(p, a);
    }

    #[test]
    fn inverse_sqrt_whitens() {
        let c = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
        let (w, usable) = inverse_sqrt_psd(&c, 0.0, 10);
        assert_eq!(usable, 2);
        let white = &w * &c * &w;
        assert!((white - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
