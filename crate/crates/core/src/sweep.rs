//! Experiment harness: simulated-data generation, seeded parameter sweeps
//! with replication averaging, and plot-ready report emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{Cholesky, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvaluateOptions, Mapping, MetricReport};
use crate::sdc::Method;

/// Seed stream tag for the anonymization step of a sweep cell.
pub const SEED_STREAM_ANONYMIZE: u64 = 0;
/// Seed stream tag for the metric evaluation (size alignment sampling).
pub const SEED_STREAM_EVALUATE: u64 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for one sweep cell.
///
/// Defined as three chained splitmix64 finalizer rounds:
/// `s1 = mix(base ^ (grid_index * 0x9E3779B97F4A7C15))`,
/// `s2 = mix(s1 ^ (replicate * 0xC2B2AE3D27D4EB4F))`,
/// `child = mix(s2 ^ stream)`, where `mix` is the splitmix64 finalizer.
/// Every (grid point, replicate, stream) combination gets an independent
/// seed, so replicates can run in parallel or in isolation and still
/// reproduce the exact outputs of a full serial sweep.
pub fn child_seed(base: u64, grid_index: u64, replicate: u64, stream: u64) -> u64 {
    let s1 = splitmix64(base ^ grid_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let s2 = splitmix64(s1 ^ replicate.wrapping_mul(0xC2B2_AE3D_27D4_EB4F));
    splitmix64(s2 ^ stream)
}

/// Draws a zero-mean multivariate Gaussian sample with unit variances and
/// constant pairwise correlation `rho`, via Cholesky coloring. Attributes
/// are named `x1..xm`.
pub fn simulate_correlated(n: usize, m: usize, rho: f64, seed: u64) -> Result<Dataset> {
    if m < 1 {
        return Err(Error::InvalidParameter(
            "simulate needs at least one attribute".into(),
        ));
    }
    if n <= m {
        return Err(Error::InvalidParameter(format!(
            "simulate needs more records than attributes, got n = {n}, m = {m}"
        )));
    }
    let lower_limit = if m > 1 { -1.0 / (m as f64 - 1.0) } else { -1.0 };
    if rho.abs() >= 1.0 || rho <= lower_limit {
        return Err(Error::InvalidParameter(format!(
            "pairwise correlation {rho} is outside ({lower_limit}, 1) and not positive definite"
        )));
    }
    let correlation = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { rho });
    let chol = Cholesky::new(correlation)
        .ok_or_else(|| Error::Numeric("correlation target is not positive definite".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let values = draw * chol.l().transpose();
    let names = (1..=m).map(|j| format!("x{j}")).collect();
    Dataset::new(names, values)
}

/// Where the original dataset of a sweep comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Path(PathBuf),
    Simulate { n: usize, m: usize, rho: f64 },
}

impl DatasetSource {
    fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSource::Path(path) => load_csv(path),
            DatasetSource::Simulate { n, m, rho } => simulate_correlated(*n, *m, *rho, seed),
        }
    }
}

/// A parameter sweep: one SDC method, a grid of parameter values, and a
/// replicate count. Every random draw is derived from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Method name as accepted by [`Method::from_name_param`].
    pub method: String,
    /// Parameter values to sweep over.
    pub grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub dataset: DatasetSource,
    /// Optional projection onto a subset of attributes before the sweep.
    pub columns: Option<Vec<String>>,
    /// Defaults to true exactly when the mapping is absent.
    pub compute_cm3: Option<bool>,
    /// Defaults to the method's natural mapping (absent for ipso).
    pub mapping: Option<Mapping>,
}

impl SweepConfig {
    pub fn new(method: &str, grid: Vec<f64>, dataset: DatasetSource) -> Self {
        Self {
            method: method.to_string(),
            grid,
            replicates: 1,
            seed: 0,
            dataset,
            columns: None,
            compute_cm3: None,
            mapping: None,
        }
    }

    /// Parses the flat `key = value` config format.
    ///
    /// Keys: `method`, `grid` (comma-separated numbers), `replicates`,
    /// `seed`, `dataset` (CSV path) or `simulate_n`/`simulate_m`/
    /// `simulate_rho`, `columns` (comma-separated attribute names),
    /// `cm3` (true/false), `mapping` (paired/absent). Lines starting with
    /// `#` are comments.
    pub fn from_key_value_str(text: &str) -> Result<Self> {
        let mut method = None;
        let mut grid = None;
        let mut replicates = 1usize;
        let mut seed = 0u64;
        let mut dataset_path: Option<PathBuf> = None;
        let mut sim_n = None;
        let mut sim_m = None;
        let mut sim_rho = None;
        let mut columns = None;
        let mut compute_cm3 = None;
        let mut mapping = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("line {}: {what}", lineno + 1));
            match key {
                "method" => method = Some(value.to_string()),
                "grid" => {
                    let parsed: std::result::Result<Vec<f64>, _> =
                        value.split(',').map(|v| v.trim().parse()).collect();
                    grid = Some(parsed.map_err(|_| bad("grid values must be numbers"))?);
                }
                "replicates" => {
                    replicates = value
                        .parse()
                        .map_err(|_| bad("replicates must be a positive integer"))?
                }
                "seed" => seed = value.parse().map_err(|_| bad("seed must be an integer"))?,
                "dataset" => dataset_path = Some(PathBuf::from(value)),
                "simulate_n" => {
                    sim_n = Some(value.parse().map_err(|_| bad("simulate_n must be an integer"))?)
                }
                "simulate_m" => {
                    sim_m = Some(value.parse().map_err(|_| bad("simulate_m must be an integer"))?)
                }
                "simulate_rho" => {
                    sim_rho =
                        Some(value.parse().map_err(|_| bad("simulate_rho must be a number"))?)
                }
                "columns" => {
                    columns = Some(
                        value
                            .split(',')
                            .map(|v| v.trim().to_string())
                            .collect::<Vec<_>>(),
                    )
                }
                "cm3" => {
                    compute_cm3 =
                        Some(value.parse().map_err(|_| bad("cm3 must be true or false"))?)
                }
                "mapping" => {
                    mapping = Some(match value {
                        "paired" => Mapping::Paired,
                        "absent" => Mapping::Absent,
                        _ => return Err(bad("mapping must be `paired` or `absent`")),
                    })
                }
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }

        let dataset = match (dataset_path, sim_n, sim_m, sim_rho) {
            (Some(path), None, None, None) => DatasetSource::Path(path),
            (None, Some(n), Some(m), Some(rho)) => DatasetSource::Simulate { n, m, rho },
            (None, None, None, None) => {
                return Err(Error::Config(
                    "config needs either `dataset` or the simulate_n/simulate_m/simulate_rho trio"
                        .into(),
                ))
            }
            _ => {
                return Err(Error::Config(
                    "give either `dataset` or all of simulate_n/simulate_m/simulate_rho, not a mix"
                        .into(),
                ))
            }
        };

        let cfg = Self {
            method: method.ok_or_else(|| Error::Config("missing key `method`".into()))?,
            grid: grid.ok_or_else(|| Error::Config("missing key `grid`".into()))?,
            replicates,
            seed,
            dataset,
            columns,
            compute_cm3,
            mapping,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|source| Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        })?;
        Self::from_key_value_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("the parameter grid must not be empty".into()));
        }
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        // every grid value must parse as a parameter of the method
        for &p in &self.grid {
            Method::from_name_param(&self.method, p)
                .map_err(|e| Error::Config(format!("grid value {p}: {e}")))?;
        }
        Ok(())
    }
}

/// Per-metric arithmetic means over the replicates of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMeans {
    pub cm1: f64,
    pub cm2: f64,
    pub cm3: Option<f64>,
    pub um: f64,
    pub mutual_information: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub parameter: f64,
    pub replicates: Vec<MetricReport>,
    pub mean: MetricMeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub method: String,
    pub points: Vec<SweepPoint>,
}

fn means_of(reports: &[MetricReport]) -> MetricMeans {
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n;
    let cm3 = if reports.iter().all(|r| r.cm3.is_some()) {
        Some(reports.iter().map(|r| r.cm3.unwrap()).sum::<f64>() / n)
    } else {
        None
    };
    MetricMeans {
        cm1: mean(&|r| r.cm1),
        cm2: mean(&|r| r.cm2),
        cm3,
        um: mean(&|r| r.um),
        mutual_information: mean(&|r| r.mutual_information),
    }
}

/// Runs a sweep: for every grid value and replicate, anonymizes the
/// dataset with a derived child seed, evaluates the metrics, and averages
/// the replicates. Cells execute in parallel; results are deterministic
/// for a given config and sorted by grid order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut base = cfg.dataset.load(cfg.seed)?;
    if let Some(columns) = &cfg.columns {
        base = base.select_columns(columns)?;
    }
    let method0 = Method::from_name_param(&cfg.method, cfg.grid[0])?;
    let mapping = cfg.mapping.unwrap_or_else(|| method0.default_mapping());
    let compute_cm3 = cfg.compute_cm3.unwrap_or(mapping == Mapping::Absent);

    let cells: Vec<(usize, usize)> = (0..cfg.grid.len())
        .flat_map(|g| (0..cfg.replicates).map(move |r| (g, r)))
        .collect();
    let reports: Vec<MetricReport> = cells
        .par_iter()
        .map(|&(g, r)| -> Result<MetricReport> {
            let parameter = cfg.grid[g];
            let in_point = |source: Error| Error::SweepPoint {
                parameter,
                replicate: r + 1,
                source: Box::new(source),
            };
            let method = Method::from_name_param(&cfg.method, parameter).map_err(in_point)?;
            let anonymized = method
                .apply(
                    &base,
                    child_seed(cfg.seed, g as u64, r as u64, SEED_STREAM_ANONYMIZE),
                )
                .map_err(in_point)?;
            let options = EvaluateOptions {
                compute_cm3,
                mapping,
                seed: child_seed(cfg.seed, g as u64, r as u64, SEED_STREAM_EVALUATE),
            };
            evaluate(&base, &anonymized, &options).map_err(in_point)
        })
        .collect::<Result<_>>()?;

    let points = cfg
        .grid
        .iter()
        .enumerate()
        .map(|(g, &parameter)| {
            let replicates: Vec<MetricReport> = reports
                [g * cfg.replicates..(g + 1) * cfg.replicates]
                .to_vec();
            let mean = means_of(&replicates);
            SweepPoint {
                parameter,
                replicates,
                mean,
            }
        })
        .collect();

    Ok(SweepResult {
        method: cfg.method.clone(),
        points,
    })
}

/// Output format of [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Rounds to `digits` significant digits; zero and non-finite values pass
/// through.
fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - magnitude);
    (x * factor).round() / factor
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ReportRow {
    parameter: f64,
    replicate: String,
    cm1: f64,
    cm2: f64,
    cm3: Option<f64>,
    um: f64,
    /// `None` encodes an infinite mutual information.
    mutual_information: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ReportDocument {
    method: String,
    rows: Vec<ReportRow>,
}

fn report_rows(result: &SweepResult) -> Vec<ReportRow> {
    let six = |x: f64| round_significant(x, 6);
    let finite = |x: f64| x.is_finite().then(|| six(x));
    let mut rows = Vec::new();
    for point in &result.points {
        for (i, r) in point.replicates.iter().enumerate() {
            rows.push(ReportRow {
                parameter: six(point.parameter),
                replicate: (i + 1).to_string(),
                cm1: six(r.cm1),
                cm2: six(r.cm2),
                cm3: r.cm3.map(six),
                um: six(r.um),
                mutual_information: finite(r.mutual_information),
            });
        }
        let mean = &point.mean;
        rows.push(ReportRow {
            parameter: six(point.parameter),
            replicate: "mean".to_string(),
            cm1: six(mean.cm1),
            cm2: six(mean.cm2),
            cm3: mean.cm3.map(six),
            um: six(mean.um),
            mutual_information: finite(mean.mutual_information),
        });
    }
    rows
}

/// Writes a sweep result as CSV (one row per grid value and statistic,
/// with `replicate` column "1".."R" or "mean") or as the structured JSON
/// equivalent. Numbers carry 6 significant digits.
pub fn emit_report<W: Write>(
    result: &SweepResult,
    format: ReportFormat,
    mut out: W,
) -> std::io::Result<()> {
    let rows = report_rows(result);
    match format {
        ReportFormat::Csv => {
            writeln!(out, "parameter,cm1,cm2,cm3,um,mutual_information,replicate")?;
            let cell = |v: Option<f64>| match v {
                Some(x) => format!("{x}"),
                None => String::new(),
            };
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.parameter,
                    r.cm1,
                    r.cm2,
                    cell(r.cm3),
                    r.um,
                    match r.mutual_information {
                        Some(x) => format!("{x}"),
                        None => "inf".to_string(),
                    },
                    r.replicate
                )?;
            }
        }
        ReportFormat::Json => {
            let doc = ReportDocument {
                method: result.method.clone(),
                rows,
            };
            let text = serde_json::to_string_pretty(&doc).expect("report serializes");
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

/// [`emit_report`] to a file path.
pub fn emit_report_to_path<P: AsRef<Path>>(
    result: &SweepResult,
    format: ReportFormat,
    path: P,
) -> Result<()> {
    let file = std::fs::File::create(path.as_ref()).map_err(|source| Error::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })?;
    emit_report(result, format, std::io::BufWriter::new(file)).map_err(|source| Error::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdc::{ipso_synthesize, mdav};

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (
            a.iter().sum::<f64>() / n,
            b.iter().sum::<f64>() / n,
        );
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / (va.sqrt() * vb.sqrt())
    }

    #[test]
    fn simulate_hits_the_target_correlation() {
        let d = simulate_correlated(1080, 4, 0.99, 5).unwrap();
        assert_eq!(d.names(), &["x1", "x2", "x3", "x4"]);
        for i in 0..4 {
            for j in (i + 1)..4 {
                let r = pearson(&d.column(i), &d.column(j));
                assert!(
                    (0.985..=0.995).contains(&r),
                    "corr(x{},x{}) = {r}",
                    i + 1,
                    j + 1
                );
            }
        }
    }

    #[test]
    fn simulate_zero_correlation_is_near_independent() {
        let n = 2000;
        let d = simulate_correlated(n, 3, 0.0, 6).unwrap();
        let bound = 4.0 / (n as f64).sqrt();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!(pearson(&d.column(i), &d.column(j)).abs() < bound);
            }
        }
    }

    #[test]
    fn simulate_is_deterministic_and_validates() {
        assert_eq!(
            simulate_correlated(100, 4, 0.6, 7).unwrap(),
            simulate_correlated(100, 4, 0.6, 7).unwrap()
        );
        assert!(simulate_correlated(100, 4, 1.0, 0).is_err());
        assert!(simulate_correlated(100, 4, -0.4, 0).is_err()); // <= -1/3
        assert!(simulate_correlated(3, 4, 0.5, 0).is_err());
    }

    #[test]
    fn child_seeds_are_distinct_across_cells_and_streams() {
        let mut seen = std::collections::HashSet::new();
        for g in 0..10u64 {
            for r in 0..10u64 {
                for s in 0..2u64 {
                    assert!(seen.insert(child_seed(42, g, r, s)));
                }
            }
        }
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let cfg = SweepConfig {
            replicates: 2,
            seed: 9,
            ..SweepConfig::new(
                "additive",
                vec![0.1, 1.0],
                DatasetSource::Simulate {
                    n: 120,
                    m: 3,
                    rho: 0.5,
                },
            )
        };
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 2);
        assert_eq!(a.points[0].parameter, 0.1);
        assert_eq!(a.points[1].parameter, 1.0);
        assert!(a.points[1].mean.cm1 > a.points[0].mean.cm1);
    }

    #[test]
    fn sweep_replicate_reruns_in_isolation() {
        let cfg = SweepConfig {
            replicates: 3,
            seed: 11,
            ..SweepConfig::new(
                "multiplicative",
                vec![0.2, 0.6],
                DatasetSource::Simulate {
                    n: 100,
                    m: 3,
                    rho: 0.4,
                },
            )
        };
        let result = run_sweep(&cfg).unwrap();
        // reproduce grid point 1, replicate 2 by hand from its child seeds
        let base = simulate_correlated(100, 3, 0.4, 11).unwrap();
        let method = Method::from_name_param("multiplicative", 0.6).unwrap();
        let y = method
            .apply(&base, child_seed(11, 1, 2, SEED_STREAM_ANONYMIZE))
            .unwrap();
        let report = evaluate(
            &base,
            &y,
            &EvaluateOptions {
                compute_cm3: false,
                mapping: Mapping::Paired,
                seed: child_seed(11, 1, 2, SEED_STREAM_EVALUATE),
            },
        )
        .unwrap();
        assert_eq!(result.points[1].replicates[2], report);
    }

    #[test]
    fn sweep_means_lie_within_replicate_range() {
        let cfg = SweepConfig {
            replicates: 4,
            seed: 13,
            ..SweepConfig::new(
                "laplace",
                vec![0.5, 5.0],
                DatasetSource::Simulate {
                    n: 150,
                    m: 3,
                    rho: 0.5,
                },
            )
        };
        // laplace default bounds need positive maxima; shift via a file-free
        // trick: simulated data is near-certain to have positive column max
        let result = run_sweep(&cfg).unwrap();
        for point in &result.points {
            for metric in [
                |m: &MetricMeans| m.cm1,
                |m: &MetricMeans| m.cm2,
                |m: &MetricMeans| m.um,
            ] {
                let mean = metric(&point.mean);
                let values: Vec<f64> = point
                    .replicates
                    .iter()
                    .map(|r| means_of(std::slice::from_ref(r)))
                    .map(|m| metric(&m))
                    .collect();
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(mean >= lo - 1e-12 && mean <= hi + 1e-12);
                assert!((0.0..=1.0).contains(&mean));
            }
        }
    }

    #[test]
    fn sweep_names_the_failing_grid_point() {
        let cfg = SweepConfig {
            ..SweepConfig::new(
                "mdav",
                vec![2.0, 500.0],
                DatasetSource::Simulate {
                    n: 50,
                    m: 2,
                    rho: 0.3,
                },
            )
        };
        match run_sweep(&cfg) {
            Err(Error::SweepPoint { parameter, .. }) => assert_eq!(parameter, 500.0),
            other => panic!("expected SweepPoint error, got {other:?}"),
        }
    }

    #[test]
    fn ipso_sweep_defaults_to_absent_mapping_with_cm3() {
        let cfg = SweepConfig {
            replicates: 2,
            seed: 15,
            ..SweepConfig::new(
                "ipso",
                vec![0.0],
                DatasetSource::Simulate {
                    n: 80,
                    m: 3,
                    rho: 0.5,
                },
            )
        };
        let result = run_sweep(&cfg).unwrap();
        let point = &result.points[0];
        assert!(point.mean.cm3.is_some());
        assert!(point.replicates.iter().all(|r| r.cm1_cm2_advisory()));
    }

    #[test]
    fn config_parses_the_documented_keys() {
        let cfg = SweepConfig::from_key_value_str(
            "# mdav sweep\n\
             method = mdav\n\
             grid = 2, 5, 10\n\
             replicates = 3\n\
             seed = 42\n\
             simulate_n = 200\n\
             simulate_m = 4\n\
             simulate_rho = 0.6\n\
             columns = x1, x2, x3\n\
             cm3 = false\n\
             mapping = paired\n",
        )
        .unwrap();
        assert_eq!(cfg.method, "mdav");
        assert_eq!(cfg.grid, vec![2.0, 5.0, 10.0]);
        assert_eq!(cfg.replicates, 3);
        assert_eq!(cfg.seed, 42);
        assert_eq!(
            cfg.dataset,
            DatasetSource::Simulate {
                n: 200,
                m: 4,
                rho: 0.6
            }
        );
        assert_eq!(
            cfg.columns,
            Some(vec!["x1".into(), "x2".into(), "x3".into()])
        );
        assert_eq!(cfg.compute_cm3, Some(false));
        assert_eq!(cfg.mapping, Some(Mapping::Paired));
    }

    #[test]
    fn config_rejects_bad_input() {
        assert!(matches!(
            SweepConfig::from_key_value_str("method = mdav\ngrid =\ndataset = x.csv"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            SweepConfig::from_key_value_str("method = mdav\ngrid = 2\ndataset = x.csv\nbogus = 1"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            SweepConfig::from_key_value_str("grid = 2\ndataset = x.csv"),
            Err(Error::Config(_))
        ));
        // empty grid never reaches emit
        let empty_grid = SweepConfig {
            grid: vec![],
            ..SweepConfig::new("mdav", vec![2.0], DatasetSource::Path("x.csv".into()))
        };
        assert!(matches!(empty_grid.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn csv_report_has_one_row_per_replicate_plus_mean() {
        let cfg = SweepConfig {
            replicates: 5,
            seed: 17,
            ..SweepConfig::new(
                "additive",
                vec![0.1, 0.5, 1.0],
                DatasetSource::Simulate {
                    n: 60,
                    m: 2,
                    rho: 0.4,
                },
            )
        };
        let result = run_sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        emit_report(&result, ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "parameter,cm1,cm2,cm3,um,mutual_information,replicate"
        );
        assert_eq!(lines.len(), 1 + 3 * (5 + 1));
        assert!(lines[6].ends_with(",mean"));
    }

    #[test]
    fn json_report_round_trips() {
        let cfg = SweepConfig {
            replicates: 2,
            seed: 19,
            ..SweepConfig::new(
                "mdav",
                vec![2.0, 4.0],
                DatasetSource::Simulate {
                    n: 40,
                    m: 2,
                    rho: 0.3,
                },
            )
        };
        let result = run_sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        emit_report(&result, ReportFormat::Json, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let doc: ReportDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.method, "mdav");
        assert_eq!(doc.rows.len(), 2 * 3);
        let again = serde_json::to_string_pretty(&doc).unwrap() + "\n";
        assert_eq!(text, again);
    }

    #[test]
    fn rounding_keeps_six_significant_digits() {
        assert_eq!(round_significant(0.12345649, 6), 0.123456);
        assert_eq!(round_significant(123456.49, 6), 123456.0);
        assert_eq!(round_significant(-0.0001234567, 6), -0.000123457);
        assert_eq!(round_significant(0.0, 6), 0.0);
        assert!(round_significant(f64::INFINITY, 6).is_infinite());
    }

    #[test]
    fn mdav_and_ipso_sweeps_reproduce_known_endpoints() {
        let base = simulate_correlated(1000, 3, 0.9, 21).unwrap();
        let k1 = mdav(&base, 1).unwrap();
        assert_eq!(k1, base);
        // exact value moments leave the rank covariance intact up to
        // sampling noise, so utility stays high
        let synthetic = ipso_synthesize(&base, 1000, 22).unwrap();
        let report = evaluate(&base, &synthetic, &EvaluateOptions::default()).unwrap();
        assert!(report.um >= 0.95, "um = {}", report.um);
    }
}
