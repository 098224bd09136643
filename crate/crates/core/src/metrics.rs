//! Bounded confidentiality metrics (CM1, CM2, CM3) and the covariance
//! eigen-spectrum utility metric (UM).
//!
//! All four metrics live in [0, 1] and are computed on attribute ranks,
//! so they are invariant under any strictly increasing per-column
//! transform of the raw values.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::cca::{canonical_correlations, covariance_pair, CanonicalSpectrum};
use crate::data::{align_sizes, rank_matrix, rank_matrix_raw, Dataset, RankMatrix};
use crate::error::{Error, Result};

/// Tolerance for the "all eigenvalues equal 1/m" case of UM.
const UNIFORM_TOL: f64 = 1e-9;
/// Below this, a divergence sum is treated as zero.
const DIVERGENCE_TOL: f64 = 1e-12;

/// Whether the row pairing of the two datasets is a true record mapping.
///
/// Synthetic generators produce no record-level mapping; CM1 and CM2 are
/// still computable on the arbitrary row pairing but are misleading there,
/// so reports carry this flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mapping {
    Paired,
    Absent,
}

/// Options for [`evaluate`].
#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    /// Also run the mapping-free sorted-projection metric (needs m >= 2).
    pub compute_cm3: bool,
    /// Whether the row pairing is a trusted record mapping.
    pub mapping: Mapping,
    /// Seed for the record-count alignment sampling.
    pub seed: u64,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self {
            compute_cm3: false,
            mapping: Mapping::Paired,
            seed: 0,
        }
    }
}

/// All metrics for one (original, anonymized) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    /// 1 - rho_1^2: confidentiality from the largest canonical correlation.
    pub cm1: f64,
    /// prod(1 - rho_i^2): confidentiality from all canonical correlations.
    pub cm2: f64,
    /// Mapping-free minimum over sorted projections; absent when not requested.
    pub cm3: Option<f64>,
    /// Covariance eigen-spectrum utility.
    pub um: f64,
    /// -ln(cm2); +infinity when cm2 is 0. Serialized as null when infinite.
    #[serde(serialize_with = "serialize_possibly_infinite")]
    pub mutual_information: f64,
    /// Paired rows were a true record mapping, or not. When `absent`,
    /// cm1 and cm2 are advisory only.
    pub mapping: Mapping,
    /// Eigenvalues of the X-rank covariance, scaled to sum to 1.
    pub lambda_x_scaled: Vec<f64>,
    /// Variance of the Y ranks explained by each X eigenvector, scaled to
    /// sum to 1.
    pub lambda_yx_scaled: Vec<f64>,
    /// The canonical spectrum behind cm1/cm2 (not serialized).
    #[serde(skip_serializing)]
    pub spectrum: CanonicalSpectrum,
}

impl MetricReport {
    /// True when cm1/cm2 were computed without a trusted record mapping.
    pub fn cm1_cm2_advisory(&self) -> bool {
        self.mapping == Mapping::Absent
    }
}

fn serialize_possibly_infinite<S: serde::Serializer>(
    v: &f64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

/// Confidentiality from the largest canonical correlation: `1 - rho_1^2`.
pub fn cm1(spectrum: &CanonicalSpectrum) -> f64 {
    1.0 - spectrum.rhos[0] * spectrum.rhos[0]
}

/// Confidentiality from all canonical correlations,
/// `prod_i (1 - rho_i^2)`, together with the mutual information it
/// encodes, `-ln` of that product (+infinity when the product is zero).
pub fn cm2(spectrum: &CanonicalSpectrum) -> (f64, f64) {
    let product: f64 = spectrum.rhos.iter().map(|rho| 1.0 - rho * rho).product();
    let mi = if product > 0.0 {
        -product.ln()
    } else {
        f64::INFINITY
    };
    (product, mi)
}

/// Stable sort of row indices by column `j`, ties keeping original order.
fn sort_order_by_column(d: &Dataset, j: usize) -> Vec<usize> {
    let col = d.column(j);
    let mut order: Vec<usize> = (0..d.n_records()).collect();
    order.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).expect("finite values"));
    order
}

/// Rows of `d` reordered by `order`, with column `drop` removed.
fn project_sorted(d: &Dataset, order: &[usize], drop: usize) -> DMatrix<f64> {
    let m = d.n_attributes();
    let keep: Vec<usize> = (0..m).filter(|&c| c != drop).collect();
    DMatrix::from_fn(order.len(), keep.len(), |i, c| {
        d.values()[(order[i], keep[c])]
    })
}

/// Mapping-free confidentiality metric.
///
/// For each attribute `j`, both datasets are sorted by that attribute
/// (stable, so tied keys keep their original row order) and projected
/// onto the remaining attributes; the sorted row order serves as the
/// hypothesized record mapping for a CM2 evaluation. The result is the
/// minimum over all `m` choices of sorting attribute.
pub fn cm3(x: &Dataset, y: &Dataset) -> Result<f64> {
    let (n, m) = (x.n_records(), x.n_attributes());
    if y.n_records() != n || y.n_attributes() != m {
        return Err(Error::shape_mismatch(
            "cm3",
            (n, m),
            (y.n_records(), y.n_attributes()),
        ));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(
            "cm3 requires at least two attributes".into(),
        ));
    }
    let mut best = f64::INFINITY;
    for j in 0..m {
        let xs = project_sorted(x, &sort_order_by_column(x, j), j);
        let ys = project_sorted(y, &sort_order_by_column(y, j), j);
        let cp = covariance_pair(&rank_matrix_raw(&xs), &rank_matrix_raw(&ys))?;
        let (value, _) = cm2(&canonical_correlations(&cp)?);
        best = best.min(value);
    }
    Ok(best)
}

/// Squared-difference divergence between two scaled eigenvalue families.
/// Bounded by 2 when both families sum to 1.
pub fn spectrum_divergence(lambda_x_scaled: &[f64], lambda_yx_scaled: &[f64]) -> f64 {
    assert_eq!(lambda_x_scaled.len(), lambda_yx_scaled.len());
    lambda_x_scaled
        .iter()
        .zip(lambda_yx_scaled)
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Divergence of a scaled eigenvalue family from the flat spectrum 1/m.
/// Bounded by (m-1)/m when the family sums to 1.
pub fn null_divergence(lambda_x_scaled: &[f64]) -> f64 {
    let uniform = 1.0 / lambda_x_scaled.len() as f64;
    lambda_x_scaled
        .iter()
        .map(|a| (a - uniform) * (a - uniform))
        .sum()
}

fn scale_to_unit_sum(mut values: Vec<f64>) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        let uniform = 1.0 / values.len() as f64;
        return vec![uniform; values.len()];
    }
    for v in &mut values {
        *v /= total;
    }
    values
}

/// The two scaled eigenvalue families behind UM: the spectrum of `cxx`
/// and the variance of the Y ranks explained by each `cxx` eigenvector.
pub(crate) fn explained_spectra_from(
    cxx: &DMatrix<f64>,
    cyy: &DMatrix<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let eig = SymmetricEigen::new(cxx.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let mut lambda_x = Vec::with_capacity(order.len());
    let mut lambda_yx = Vec::with_capacity(order.len());
    for &i in &order {
        let v = eig.eigenvectors.column(i);
        lambda_x.push(eig.eigenvalues[i].max(0.0));
        lambda_yx.push((v.transpose() * cyy * v)[(0, 0)].max(0.0));
    }
    (scale_to_unit_sum(lambda_x), scale_to_unit_sum(lambda_yx))
}

/// UM from already-scaled eigenvalue families.
///
/// Returns 1 when both families are flat (no correlation structure to
/// lose), 0 when the divergence matches or exceeds what a structureless
/// anonymization would produce, and the complementary divergence ratio in
/// between. A spectrum divergence at floating-point-noise level counts as
/// zero information loss, so identical inputs score exactly 1.
pub fn um_from_scaled(lambda_x_scaled: &[f64], lambda_yx_scaled: &[f64]) -> f64 {
    let uniform = 1.0 / lambda_x_scaled.len() as f64;
    let flat = |values: &[f64]| values.iter().all(|v| (v - uniform).abs() <= UNIFORM_TOL);
    if flat(lambda_x_scaled) && flat(lambda_yx_scaled) {
        return 1.0;
    }
    let divergence = spectrum_divergence(lambda_x_scaled, lambda_yx_scaled);
    if divergence <= DIVERGENCE_TOL {
        return 1.0;
    }
    let null = null_divergence(lambda_x_scaled);
    if null <= DIVERGENCE_TOL {
        // X was spherical but Y is not: any structure in Y is spurious.
        return 0.0;
    }
    1.0 - (divergence / null).min(1.0)
}

/// Covariance eigen-spectrum utility of the pair of rank matrices.
pub fn um(x_ranks: &RankMatrix, y_ranks: &RankMatrix) -> Result<f64> {
    let cp = covariance_pair(x_ranks, y_ranks)?;
    let (lx, lyx) = explained_spectra_from(&cp.cxx, &cp.cyy);
    Ok(um_from_scaled(&lx, &lyx))
}

/// Full metric evaluation of an (original, anonymized) pair.
///
/// Aligns record counts by seeded sampling, ranks both sets and computes
/// the canonical spectrum, CM1, CM2 with its mutual information, UM, and
/// CM3 when requested.
pub fn evaluate(x: &Dataset, y: &Dataset, options: &EvaluateOptions) -> Result<MetricReport> {
    if x.n_attributes() != y.n_attributes() {
        return Err(Error::shape_mismatch(
            "evaluate",
            (x.n_records(), x.n_attributes()),
            (y.n_records(), y.n_attributes()),
        ));
    }
    let (x, y) = align_sizes(x, y, options.seed)?;
    let rx = rank_matrix(&x);
    let ry = rank_matrix(&y);
    let cp = covariance_pair(&rx, &ry)?;
    let spectrum = canonical_correlations(&cp)?;
    let cm1_value = cm1(&spectrum);
    let (cm2_value, mutual_information) = cm2(&spectrum);
    let (lambda_x_scaled, lambda_yx_scaled) = explained_spectra_from(&cp.cxx, &cp.cyy);
    let um_value = um_from_scaled(&lambda_x_scaled, &lambda_yx_scaled);
    let cm3_value = if options.compute_cm3 {
        Some(cm3(&x, &y)?)
    } else {
        None
    };
    Ok(MetricReport {
        cm1: cm1_value,
        cm2: cm2_value,
        cm3: cm3_value,
        um: um_value,
        mutual_information,
        mapping: options.mapping,
        lambda_x_scaled,
        lambda_yx_scaled,
        spectrum,
    })
}
