//! Confidentiality and utility measurement for anonymized microdata.
//!
//! Anonymization of numeric microdata is functionally a permutation of
//! each attribute's ranks plus residual, rank-preserving noise. This
//! crate measures how much permutation an anonymization method applied
//! (confidentiality) and how much of the original covariance structure
//! survived (utility), all on a [0, 1] scale:
//!
//! - `CM1`: one minus the squared largest canonical correlation between
//!   the original and anonymized rank matrices.
//! - `CM2`: the product of `1 - rho_i^2` over all canonical correlations,
//!   with its mutual-information reading `-ln(CM2)`.
//! - `CM3`: a mapping-free variant for synthetic data, taking the minimum
//!   CM2 over sorted single-attribute projections.
//! - `UM`: compares the eigen-spectrum of the original rank covariance
//!   with the variance those eigenvectors explain in the anonymized ranks.
//!
//! The [`sdc`] module bundles five anonymization methods (MDAV
//! microaggregation, Laplace noise for differential privacy, additive and
//! multiplicative noise, and exact-moment synthetic data) and the
//! [`sweep`] module runs seeded parameter sweeps over them.

pub mod cca;
pub mod data;
pub mod error;
pub mod metrics;
pub mod sdc;
pub mod sweep;

pub use cca::{canonical_correlations, covariance_pair, CanonicalSpectrum, CovariancePair};
pub use data::{align_sizes, load_csv, rank_matrix, reverse_map, Dataset, RankMatrix};
pub use error::{Error, Result};
pub use metrics::{
    cm1, cm2, cm3, evaluate, null_divergence, spectrum_divergence, um, EvaluateOptions, Mapping,
    MetricReport,
};
pub use sdc::{
    additive_noise, column_shuffle, ipso_synthesize, laplace_dp, mdav, multiplicative_noise,
    trivial_record_swap, DomainBounds, Method, NoiseKind, NoiseSpec,
};
pub use sweep::{
    child_seed, emit_report, emit_report_to_path, run_sweep, simulate_correlated, DatasetSource,
    ReportFormat, SweepConfig, SweepResult,
};
