//! Anonymization methods: MDAV microaggregation, Laplace noise for
//! differential privacy, additive and multiplicative noise, IPSO-style
//! synthetic data, and two permutation fixtures.
//!
//! Every method is a pure function of `(input, seed)`, so runs are
//! reproducible and independent replicates can execute in parallel.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::Mapping;

/// Per-attribute domain bounds used as the sensitivity interval of the
/// Laplace mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBounds {
    /// Explicit bounds; `upper` must exceed `lower` attribute-wise.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidParameter(format!(
                "domain bounds have {} lower and {} upper entries",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "attribute {j}: upper bound {hi} must exceed lower bound {lo}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Default bounds: 0 below and 1.5 times the attribute maximum above.
    pub fn for_dataset(d: &Dataset) -> Result<Self> {
        let mut lower = Vec::with_capacity(d.n_attributes());
        let mut upper = Vec::with_capacity(d.n_attributes());
        for j in 0..d.n_attributes() {
            let max = d.column(j).into_iter().fold(f64::NEG_INFINITY, f64::max);
            if max <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "attribute {:?} has maximum {max}; default bounds [0, 1.5*max] \
                     need a positive maximum, pass explicit bounds instead",
                    d.names()[j]
                )));
            }
            lower.push(0.0);
            upper.push(1.5 * max);
        }
        Ok(Self { lower, upper })
    }

    fn check_width(&self, m: usize) -> Result<()> {
        if self.lower.len() != m {
            return Err(Error::InvalidParameter(format!(
                "domain bounds cover {} attributes, dataset has {m}",
                self.lower.len()
            )));
        }
        Ok(())
    }
}

/// One of the three noise mechanisms with its parameter and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Additive,
    Multiplicative,
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// alpha for additive, beta for multiplicative, epsilon for Laplace.
    pub parameter: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            NoiseKind::Additive => self.parameter > 0.0,
            NoiseKind::Multiplicative => (0.0..1.0).contains(&self.parameter),
            NoiseKind::Laplace => self.parameter > 0.0,
        };
        if ok && self.parameter.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "noise parameter {} is out of range for {:?}",
                self.parameter, self.kind
            )))
        }
    }

    /// Applies the noise to a dataset; Laplace uses the default domain
    /// bounds of the input.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        self.validate()?;
        match self.kind {
            NoiseKind::Additive => additive_noise(d, self.parameter, self.seed),
            NoiseKind::Multiplicative => multiplicative_noise(d, self.parameter, self.seed),
            NoiseKind::Laplace => {
                let bounds = DomainBounds::for_dataset(d)?;
                laplace_dp(d, self.parameter, &bounds, self.seed)
            }
        }
    }
}

fn column_mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Column-standardized copy; constant columns are centered only.
fn standardized(values: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = values.clone();
    for j in 0..out.ncols() {
        let col: Vec<f64> = out.column(j).iter().copied().collect();
        let (mean, sd) = column_mean_sd(&col);
        let scale = if sd > 0.0 { sd } else { 1.0 };
        for i in 0..out.nrows() {
            out[(i, j)] = (out[(i, j)] - mean) / scale;
        }
    }
    out
}

fn squared_distance(points: &DMatrix<f64>, i: usize, target: &DVector<f64>) -> f64 {
    let mut sum = 0.0;
    for j in 0..points.ncols() {
        let d = points[(i, j)] - target[j];
        sum += d * d;
    }
    sum
}

fn centroid_of(points: &DMatrix<f64>, members: &[usize]) -> DVector<f64> {
    let mut c = DVector::zeros(points.ncols());
    for &i in members {
        for j in 0..points.ncols() {
            c[j] += points[(i, j)];
        }
    }
    c / members.len() as f64
}

/// Index (into `remaining`) of the record farthest from `target`.
/// `remaining` stays in ascending record order, so distance ties go to
/// the lowest record index.
fn farthest_from(points: &DMatrix<f64>, remaining: &[usize], target: &DVector<f64>) -> usize {
    let mut best = 0;
    let mut best_dist = f64::NEG_INFINITY;
    for (pos, &i) in remaining.iter().enumerate() {
        let dist = squared_distance(points, i, target);
        if dist > best_dist {
            best_dist = dist;
            best = pos;
        }
    }
    best
}

/// Removes the record at `seed_pos` and its `k - 1` nearest neighbours
/// from `remaining`, returning them as one cluster. Distance ties break on
/// the lower record index.
fn take_cluster(
    points: &DMatrix<f64>,
    remaining: &mut Vec<usize>,
    seed_pos: usize,
    k: usize,
) -> Vec<usize> {
    let seed = remaining.remove(seed_pos);
    let seed_point = points.row(seed).transpose();
    let mut by_dist: Vec<(f64, usize)> = remaining
        .iter()
        .map(|&i| (squared_distance(points, i, &seed_point), i))
        .collect();
    by_dist.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite distances")
            .then(a.1.cmp(&b.1))
    });
    let mut cluster = vec![seed];
    let picked: Vec<usize> = by_dist.iter().take(k - 1).map(|&(_, i)| i).collect();
    remaining.retain(|i| !picked.contains(i));
    cluster.extend(picked);
    cluster
}

/// MDAV microaggregation: partitions the records into clusters of at
/// least `k` and replaces each record by its cluster centroid.
///
/// Clusters are built on attribute values standardized to zero mean and
/// unit variance, so no single wide attribute dominates the Euclidean
/// distance; the published centroids are computed on the original values,
/// which preserves the column means. Output row order matches the input.
pub fn mdav(d: &Dataset, k: usize) -> Result<Dataset> {
    let n = d.n_records();
    if k < 1 {
        return Err(Error::InvalidParameter("mdav requires k >= 1".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!(
            "mdav k = {k} exceeds the record count {n}"
        )));
    }
    let points = standardized(d.values());
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut clusters: Vec<Vec<usize>> = Vec::new();

    while remaining.len() >= 3 * k {
        let center = centroid_of(&points, &remaining);
        let r_pos = farthest_from(&points, &remaining, &center);
        let r = remaining[r_pos];
        clusters.push(take_cluster(&points, &mut remaining, r_pos, k));
        let r_point = points.row(r).transpose();
        let s_pos = farthest_from(&points, &remaining, &r_point);
        clusters.push(take_cluster(&points, &mut remaining, s_pos, k));
    }
    if remaining.len() >= 2 * k {
        let center = centroid_of(&points, &remaining);
        let r_pos = farthest_from(&points, &remaining, &center);
        clusters.push(take_cluster(&points, &mut remaining, r_pos, k));
    }
    if !remaining.is_empty() {
        clusters.push(std::mem::take(&mut remaining));
    }

    let mut values = d.values().clone();
    for cluster in &clusters {
        let centroid = centroid_of(d.values(), cluster);
        for &i in cluster {
            for j in 0..d.n_attributes() {
                values[(i, j)] = centroid[j];
            }
        }
    }
    Dataset::new(d.names().to_vec(), values)
}

/// Cholesky factorization that also rejects numerically rank-deficient
/// matrices, where the bare factorization may still "succeed" on a pivot
/// of floating-point-noise size.
fn well_conditioned_cholesky(cov: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let chol = Cholesky::new(cov).ok_or_else(|| {
        Error::Numeric("ipso requires a positive-definite covariance matrix".into())
    })?;
    let diag = chol.l().diagonal();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 1e-6 * max {
        return Err(Error::Numeric(
            "ipso requires a full-rank covariance matrix".into(),
        ));
    }
    Ok(chol)
}

fn laplace_sample(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    loop {
        let u: f64 = rng.random_range(-0.5..0.5);
        let t = 1.0 - 2.0 * u.abs();
        if t > 0.0 {
            return -scale * u.signum() * t.ln();
        }
    }
}

/// Laplace mechanism for epsilon-differential privacy on unaggregated
/// cells.
///
/// The budget is split evenly over the `m` attributes; attribute `j`
/// receives noise of scale `(upper_j - lower_j) / (epsilon / m)`, its
/// domain width acting as the sensitivity. Noisy values are not clamped
/// back into the domain.
pub fn laplace_dp(d: &Dataset, epsilon: f64, bounds: &DomainBounds, seed: u64) -> Result<Dataset> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let m = d.n_attributes();
    bounds.check_width(m)?;
    DomainBounds::new(bounds.lower.clone(), bounds.upper.clone())?;
    let per_attribute = epsilon / m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = d.values().clone();
    for j in 0..m {
        let scale = (bounds.upper[j] - bounds.lower[j]) / per_attribute;
        for i in 0..d.n_records() {
            values[(i, j)] += laplace_sample(&mut rng, scale);
        }
    }
    Dataset::new(d.names().to_vec(), values)
}

/// Adds zero-mean Gaussian noise with standard deviation `alpha * sigma_j`
/// to each attribute, `sigma_j` being the attribute's sample standard
/// deviation. Constant attributes are left untouched.
pub fn additive_noise(d: &Dataset, alpha: f64, seed: u64) -> Result<Dataset> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = d.values().clone();
    for j in 0..d.n_attributes() {
        let (_, sd) = column_mean_sd(&d.column(j));
        if sd == 0.0 {
            continue;
        }
        let normal = Normal::new(0.0, alpha * sd)
            .map_err(|e| Error::InvalidParameter(format!("invalid noise scale: {e}")))?;
        for i in 0..d.n_records() {
            values[(i, j)] += normal.sample(&mut rng);
        }
    }
    Dataset::new(d.names().to_vec(), values)
}

/// Multiplies every cell by an independent Uniform(1-beta, 1+beta) draw.
pub fn multiplicative_noise(d: &Dataset, beta: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in [0, 1), got {beta}"
        )));
    }
    let uniform = rand::distr::Uniform::new_inclusive(1.0 - beta, 1.0 + beta)
        .map_err(|e| Error::InvalidParameter(format!("invalid noise range: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = d.values().clone();
    for j in 0..d.n_attributes() {
        for i in 0..d.n_records() {
            values[(i, j)] *= uniform.sample(&mut rng);
        }
    }
    Dataset::new(d.names().to_vec(), values)
}

/// Generates a synthetic dataset whose sample mean vector and sample
/// covariance matrix equal the original's exactly (up to floating-point
/// roundoff).
///
/// A seeded Gaussian draw is centered, whitened by the Cholesky factor of
/// its own sample covariance and re-colored by the Cholesky factor of the
/// original covariance, then shifted to the original means.
pub fn ipso_synthesize(d: &Dataset, n_out: usize, seed: u64) -> Result<Dataset> {
    let m = d.n_attributes();
    if n_out < m + 2 {
        return Err(Error::InvalidParameter(format!(
            "ipso needs at least m + 2 = {} output records, got {n_out}",
            m + 2
        )));
    }
    let n = d.n_records() as f64;
    let mut means = DVector::zeros(m);
    for j in 0..m {
        means[j] = d.values().column(j).iter().sum::<f64>() / n;
    }
    let mut centered = d.values().clone();
    for j in 0..m {
        for i in 0..d.n_records() {
            centered[(i, j)] -= means[j];
        }
    }
    let cov = centered.transpose() * &centered / (n - 1.0);
    let chol = well_conditioned_cholesky(cov)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = DMatrix::from_fn(n_out, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    for j in 0..m {
        let mean = draw.column(j).iter().sum::<f64>() / n_out as f64;
        for i in 0..n_out {
            draw[(i, j)] -= mean;
        }
    }
    let draw_cov = draw.transpose() * &draw / (n_out as f64 - 1.0);
    let draw_chol = Cholesky::new(draw_cov).ok_or_else(|| {
        Error::Numeric("degenerate Gaussian draw; covariance not invertible".into())
    })?;
    // whiten: rows of `white` have identity sample covariance
    let white = draw_chol
        .l()
        .solve_lower_triangular(&draw.transpose())
        .ok_or_else(|| Error::Numeric("triangular solve failed in ipso".into()))?
        .transpose();
    let mut values = white * chol.l().transpose();
    for j in 0..m {
        for i in 0..n_out {
            values[(i, j)] += means[j];
        }
    }
    Dataset::new(d.names().to_vec(), values)
}

/// Applies one random permutation to whole records. Provides no real
/// protection; used as the CM3 = 0 fixture.
pub fn trivial_record_swap(d: &Dataset, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d.n_records()).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let values = DMatrix::from_fn(d.n_records(), d.n_attributes(), |i, j| {
        d.values()[(order[i], j)]
    });
    Dataset::new(d.names().to_vec(), values).expect("row permutation keeps the dataset valid")
}

/// Applies an independent random permutation to each column, destroying
/// every record-level association; used as the CM1 = 1 fixture.
pub fn column_shuffle(d: &Dataset, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = d.values().clone();
    use rand::seq::SliceRandom;
    for j in 0..d.n_attributes() {
        let mut order: Vec<usize> = (0..d.n_records()).collect();
        order.shuffle(&mut rng);
        for i in 0..d.n_records() {
            values[(i, j)] = d.values()[(order[i], j)];
        }
    }
    Dataset::new(d.names().to_vec(), values).expect("column permutations keep the dataset valid")
}

/// An anonymization method addressable by name and parameter, as exposed
/// by the CLI and sweep configs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Mdav { k: usize },
    LaplaceDp { epsilon: f64 },
    AdditiveNoise { alpha: f64 },
    MultiplicativeNoise { beta: f64 },
    /// `n_out = None` keeps the input record count.
    Ipso { n_out: Option<usize> },
    RecordSwap,
    ColumnShuffle,
}

impl Method {
    /// Parses a method from its CLI/config name and numeric parameter.
    ///
    /// Names: `mdav` (k), `laplace` (epsilon), `additive` (alpha),
    /// `multiplicative` (beta), `ipso` (output records; 0 keeps the input
    /// count), `record-swap` and `column-shuffle` (parameter ignored).
    pub fn from_name_param(name: &str, parameter: f64) -> Result<Method> {
        let integer = |what: &str| -> Result<usize> {
            if parameter.fract() != 0.0 || parameter < 0.0 || !parameter.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{what} must be a non-negative integer, got {parameter}"
                )));
            }
            Ok(parameter as usize)
        };
        Ok(match name {
            "mdav" => Method::Mdav { k: integer("k")? },
            "laplace" => Method::LaplaceDp { epsilon: parameter },
            "additive" => Method::AdditiveNoise { alpha: parameter },
            "multiplicative" => Method::MultiplicativeNoise { beta: parameter },
            "ipso" => {
                let n_out = integer("ipso output size")?;
                Method::Ipso {
                    n_out: if n_out == 0 { None } else { Some(n_out) },
                }
            }
            "record-swap" => Method::RecordSwap,
            "column-shuffle" => Method::ColumnShuffle,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown method {other:?}; expected one of mdav, laplace, additive, \
                     multiplicative, ipso, record-swap, column-shuffle"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Mdav { .. } => "mdav",
            Method::LaplaceDp { .. } => "laplace",
            Method::AdditiveNoise { .. } => "additive",
            Method::MultiplicativeNoise { .. } => "multiplicative",
            Method::Ipso { .. } => "ipso",
            Method::RecordSwap => "record-swap",
            Method::ColumnShuffle => "column-shuffle",
        }
    }

    /// Synthetic output carries no record mapping; everything else does.
    pub fn default_mapping(&self) -> Mapping {
        match self {
            Method::Ipso { .. } => Mapping::Absent,
            _ => Mapping::Paired,
        }
    }

    pub fn apply(&self, d: &Dataset, seed: u64) -> Result<Dataset> {
        match *self {
            Method::Mdav { k } => mdav(d, k),
            Method::LaplaceDp { epsilon } => {
                let bounds = DomainBounds::for_dataset(d)?;
                laplace_dp(d, epsilon, &bounds, seed)
            }
            Method::AdditiveNoise { alpha } => additive_noise(d, alpha, seed),
            Method::MultiplicativeNoise { beta } => multiplicative_noise(d, beta, seed),
            Method::Ipso { n_out } => ipso_synthesize(d, n_out.unwrap_or(d.n_records()), seed),
            Method::RecordSwap => Ok(trivial_record_swap(d, seed)),
            Method::ColumnShuffle => Ok(column_shuffle(d, seed)),
        }
    }
}
