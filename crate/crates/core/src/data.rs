//! Numeric microdata sets, their rank view, reverse mapping and
//! record-count alignment.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A numeric microdata set: `n` records over `m` named attributes.
///
/// Every cell is a finite real number; `n >= 2` and `m >= 1` always hold.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl Dataset {
    /// Builds a dataset, validating the invariants: at least two records,
    /// at least one attribute, one name per column, every cell finite.
    pub fn new(names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() == 0 || names.is_empty() {
            return Err(Error::NoAttributes);
        }
        if names.len() != values.ncols() {
            return Err(Error::NameCountMismatch {
                names: names.len(),
                columns: values.ncols(),
            });
        }
        if values.nrows() < 2 {
            return Err(Error::TooFewRecords {
                found: values.nrows(),
            });
        }
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if !values[(i, j)].is_finite() {
                    return Err(Error::NonFinite {
                        row: i + 1,
                        column: names[j].clone(),
                    });
                }
            }
        }
        Ok(Self { names, values })
    }

    /// Convenience constructor from row-major data.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: m,
                    found: r.len(),
                });
            }
        }
        let values = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
        Self::new(names, values)
    }

    pub fn n_records(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_attributes(&self) -> usize {
        self.values.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Projects the dataset onto the named attributes, in the order given.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let mut indices = Vec::with_capacity(names.len());
        for name in names {
            let j = self
                .names
                .iter()
                .position(|n| n == name.as_ref())
                .ok_or_else(|| Error::UnknownAttribute(name.as_ref().to_string()))?;
            indices.push(j);
        }
        let values = DMatrix::from_fn(self.n_records(), indices.len(), |i, j| {
            self.values[(i, indices[j])]
        });
        Dataset::new(
            indices.iter().map(|&j| self.names[j].clone()).collect(),
            values,
        )
    }

    /// Returns a copy keeping only the listed record indices, in order.
    pub(crate) fn take_rows(&self, rows: &[usize]) -> Dataset {
        let values = DMatrix::from_fn(rows.len(), self.n_attributes(), |i, j| {
            self.values[(rows[i], j)]
        });
        Dataset {
            names: self.names.clone(),
            values,
        }
    }

    /// Writes the dataset as CSV: header row of attribute names, then one
    /// record per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.names.join(","))?;
        for i in 0..self.n_records() {
            let row: Vec<String> = (0..self.n_attributes())
                .map(|j| format!("{}", self.values[(i, j)]))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path.as_ref()).map_err(|source| Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|source| Error::Io {
                path: path.as_ref().to_path_buf(),
                source,
            })
    }
}

/// Per-attribute fractional ranks of a dataset.
///
/// Column `j` holds the ranks of column `j` of the source, ascending, with
/// tied values receiving the average of the ranks they span. Each rank
/// column therefore sums to `n(n+1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    ranks: DMatrix<f64>,
}

impl RankMatrix {
    pub fn n_records(&self) -> usize {
        self.ranks.nrows()
    }

    pub fn n_attributes(&self) -> usize {
        self.ranks.ncols()
    }

    pub fn ranks(&self) -> &DMatrix<f64> {
        &self.ranks
    }
}

/// Fractional (average-ties) ranks of one column, 1-based.
pub(crate) fn rank_column(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 are shared; assign their average
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Computes the rank view of a dataset.
pub fn rank_matrix(d: &Dataset) -> RankMatrix {
    rank_matrix_raw(&d.values)
}

pub(crate) fn rank_matrix_raw(values: &DMatrix<f64>) -> RankMatrix {
    let (n, m) = (values.nrows(), values.ncols());
    let mut ranks = DMatrix::zeros(n, m);
    for j in 0..m {
        let col: Vec<f64> = values.column(j).iter().copied().collect();
        for (i, r) in rank_column(&col).into_iter().enumerate() {
            ranks[(i, j)] = r;
        }
    }
    RankMatrix { ranks }
}

/// Reverse-maps an anonymized dataset onto the original values.
///
/// For each attribute, record `i` of the result takes the original value
/// whose rank equals the rank of `anonymized[i]` within its column. The
/// result is a per-column permutation of `original` whose ranks match the
/// ranks of `anonymized`. Fractional ranks arising from ties in the
/// anonymized column are rounded to the nearest integer position.
pub fn reverse_map(original: &Dataset, anonymized: &Dataset) -> Result<Dataset> {
    let (n, m) = (original.n_records(), original.n_attributes());
    if anonymized.n_records() != n || anonymized.n_attributes() != m {
        return Err(Error::shape_mismatch(
            "reverse_map",
            (n, m),
            (anonymized.n_records(), anonymized.n_attributes()),
        ));
    }
    let mut values = DMatrix::zeros(n, m);
    for j in 0..m {
        let mut sorted = original.column(j);
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let y_ranks = rank_column(&anonymized.column(j));
        for i in 0..n {
            let pos = (y_ranks[i].round() as usize).clamp(1, n);
            values[(i, j)] = sorted[pos - 1];
        }
    }
    Dataset::new(original.names.clone(), values)
}

/// Brings two datasets to a common record count by uniform sampling
/// without replacement from the larger one. Equal-size inputs are
/// returned unchanged; the sampling is seeded and reproducible.
pub fn align_sizes(a: &Dataset, b: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    if a.n_attributes() != b.n_attributes() {
        return Err(Error::shape_mismatch(
            "align_sizes",
            (a.n_records(), a.n_attributes()),
            (b.n_records(), b.n_attributes()),
        ));
    }
    let (na, nb) = (a.n_records(), b.n_records());
    if na == nb {
        return Ok((a.clone(), b.clone()));
    }
    let target = na.min(nb);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |d: &Dataset, rng: &mut ChaCha8Rng| {
        let mut rows = rand::seq::index::sample(rng, d.n_records(), target).into_vec();
        rows.sort_unstable();
        d.take_rows(&rows)
    };
    if na > nb {
        Ok((sample(a, &mut rng), b.clone()))
    } else {
        Ok((a.clone(), sample(b, &mut rng)))
    }
}

/// Loads a dataset from a CSV file: UTF-8, comma-separated, mandatory
/// header row of attribute names, every field a decimal real number.
pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let names: Vec<String> = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let m = names.len();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if record.len() != m {
            return Err(Error::RaggedRow {
                row,
                expected: m,
                found: record.len(),
            });
        }
        let mut parsed = Vec::with_capacity(m);
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::NonNumericCell {
                row,
                column: names[j].clone(),
                value: field.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonNumericCell {
                    row,
                    column: names[j].clone(),
                    value: field.to_string(),
                });
            }
            parsed.push(value);
        }
        rows.push(parsed);
    }

    if rows.len() < 2 {
        return Err(Error::TooFewRecords { found: rows.len() });
    }
    Dataset::from_rows(names, &rows)
}
