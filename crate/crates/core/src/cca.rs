//! Covariance computation and canonical correlation analysis between two
//! rank matrices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::RankMatrix;
use crate::error::{Error, Result};

/// Eigenvalues of a covariance matrix below `RANK_TOL * lambda_max` are
/// treated as zero when whitening, so constant or duplicated attributes
/// cannot blow up the pseudo-inverse square root.
pub const RANK_TOL: f64 = 1e-10;

/// The three covariance blocks of a paired pair of rank matrices.
#[derive(Debug, Clone)]
pub struct CovariancePair {
    /// Sample covariance of the X ranks (m x m, symmetric PSD).
    pub cxx: DMatrix<f64>,
    /// Sample covariance of the Y ranks (m x m, symmetric PSD).
    pub cyy: DMatrix<f64>,
    /// Cross-covariance of X ranks with Y ranks; `cyx` is its transpose.
    pub cxy: DMatrix<f64>,
}

/// Ordered canonical correlations and their basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSpectrum {
    /// Canonical correlations in non-increasing order, all in [0, 1].
    /// Entries past `effective_rank` are exactly zero.
    pub rhos: Vec<f64>,
    /// Canonical directions for X, one unit column per correlation.
    pub basis_x: DMatrix<f64>,
    /// Canonical directions for Y, one unit column per correlation.
    pub basis_y: DMatrix<f64>,
    /// min(rank(cxx), rank(cyy)) under the `RANK_TOL` threshold.
    pub effective_rank: usize,
}

impl CanonicalSpectrum {
    pub fn m(&self) -> usize {
        self.rhos.len()
    }
}

fn centered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        col.add_scalar_mut(-mean);
    }
    out
}

/// Unbiased sample covariances (divisor n-1) over paired rows of two rank
/// matrices. The row-wise pairing is the record mapping.
pub fn covariance_pair(rx: &RankMatrix, ry: &RankMatrix) -> Result<CovariancePair> {
    if rx.n_records() != ry.n_records() || rx.n_attributes() != ry.n_attributes() {
        return Err(Error::shape_mismatch(
            "covariance_pair",
            (rx.n_records(), rx.n_attributes()),
            (ry.n_records(), ry.n_attributes()),
        ));
    }
    let n = rx.n_records() as f64;
    let ax = centered(rx.ranks());
    let ay = centered(ry.ranks());
    let cxx = symmetrize(ax.transpose() * &ax / (n - 1.0));
    let cyy = symmetrize(ay.transpose() * &ay / (n - 1.0));
    let cxy = ax.transpose() * &ay / (n - 1.0);
    Ok(CovariancePair { cxx, cyy, cxy })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Symmetric pseudo-inverse square root of a PSD matrix, together with its
/// numerical rank. Directions with eigenvalues at or below
/// `RANK_TOL * lambda_max` are dropped.
fn pinv_sqrt(c: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let m = c.nrows();
    let eig = SymmetricEigen::new(c.clone());
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if lambda_max <= 0.0 {
        return (DMatrix::zeros(m, m), 0);
    }
    let threshold = RANK_TOL * lambda_max;
    let mut w = DMatrix::zeros(m, m);
    let mut rank = 0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > threshold {
            rank += 1;
            let v = eig.eigenvectors.column(i);
            w += v * v.transpose() / lambda.sqrt();
        }
    }
    (w, rank)
}

/// Canonical correlations of a covariance pair.
///
/// Solves the CCA eigenproblem in its symmetric whitened form: the
/// singular values of `Wx * Cxy * Wy`, where `Wx` and `Wy` are the
/// pseudo-inverse square roots of `Cxx` and `Cyy`. On full-rank inputs
/// this is identical to the generalized eigenvalue formulation; on
/// rank-deficient ones the degenerate directions are excluded and their
/// correlations reported as zero. Singular values are clamped into [0, 1]
/// to absorb floating-point overshoot.
pub fn canonical_correlations(cp: &CovariancePair) -> Result<CanonicalSpectrum> {
    let m = cp.cxx.nrows();
    if cp.cyy.nrows() != m || cp.cxy.nrows() != m || cp.cxy.ncols() != m {
        return Err(Error::shape_mismatch(
            "canonical_correlations",
            (cp.cxx.nrows(), cp.cxx.ncols()),
            (cp.cxy.nrows(), cp.cxy.ncols()),
        ));
    }
    let (wx, rank_x) = pinv_sqrt(&cp.cxx);
    let (wy, rank_y) = pinv_sqrt(&cp.cyy);
    let effective_rank = rank_x.min(rank_y);

    let k = &wx * &cp.cxy * &wy;
    let svd = k
        .try_svd(true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("SVD of the whitened cross-covariance did not converge".into()))?;
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("finite singular values")
    });

    let mut rhos = vec![0.0; m];
    let mut basis_x = DMatrix::zeros(m, m);
    let mut basis_y = DMatrix::zeros(m, m);
    for (pos, &src) in order.iter().enumerate() {
        if pos < effective_rank {
            rhos[pos] = svd.singular_values[src].clamp(0.0, 1.0);
        }
        let bx = &wx * u.column(src);
        let by = &wy * vt.row(src).transpose();
        basis_x.set_column(pos, &normalized_or_zero(bx));
        basis_y.set_column(pos, &normalized_or_zero(by));
    }

    Ok(CanonicalSpectrum {
        rhos,
        basis_x,
        basis_y,
        effective_rank,
    })
}

fn normalized_or_zero(v: nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
    let norm = v.norm();
    if norm > 0.0 {
        v / norm
    } else {
        v
    }
}
