//! Datasets: synthetic contaminated samples, CSV ingestion and bootstrap
//! resampling.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Covariates;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum Provenance {
    Synthetic { seed: u64 },
    File { path: PathBuf },
    Bootstrap { seed: u64 },
    Inline,
}

/// Which observations were shifted when the data were generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contamination {
    pub tau_percent: f64,
    pub shift: f64,
    /// Sorted, distinct indices of the shifted observations.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x: Option<Covariates>,
    pub provenance: Provenance,
    pub contamination: Option<Contamination>,
}

/// Column mapping for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub response_col: String,
    #[serde(default)]
    pub covariate_cols: Vec<String>,
}

impl CsvSchema {
    pub fn response(col: impl Into<String>) -> Self {
        CsvSchema {
            response_col: col.into(),
            covariate_cols: Vec::new(),
        }
    }

    pub fn regression(response: impl Into<String>, covariates: &[&str]) -> Self {
        CsvSchema {
            response_col: response.into(),
            covariate_cols: covariates.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Dataset {
    pub fn from_responses(y: Vec<f64>) -> Self {
        Dataset {
            y,
            x: None,
            provenance: Provenance::Inline,
            contamination: None,
        }
    }

    pub fn with_covariates(y: Vec<f64>, x: Covariates) -> Result<Self> {
        if x.n_rows() != y.len() {
            return Err(Error::Schema(format!(
                "{} covariate rows for {} responses",
                x.n_rows(),
                y.len()
            )));
        }
        Ok(Dataset {
            y,
            x: Some(x),
            provenance: Provenance::Inline,
            contamination: None,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn covariate_dim(&self) -> usize {
        self.x.as_ref().map_or(0, Covariates::dim)
    }

    #[inline]
    pub fn covariate_row(&self, i: usize) -> Option<&[f64]> {
        self.x.as_ref().map(|c| c.row(i))
    }

    /// `(y_i, x_i)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, Option<&[f64]>)> + '_ {
        self.y
            .iter()
            .enumerate()
            .map(move |(i, &y)| (y, self.covariate_row(i)))
    }

    pub fn mean(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.len() as f64
    }

    /// Sample standard deviation (divisor `n - 1`; zero for a single point).
    pub fn sd(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.y.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rows at `indices`, in that order; contamination metadata is dropped.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            y: indices.iter().map(|&i| self.y[i]).collect(),
            x: self.x.as_ref().map(|c| c.select(indices)),
            provenance: self.provenance.clone(),
            contamination: None,
        }
    }

    /// Writes a headered CSV with 17 significant digits per value, which
    /// [`load_csv`] reads back bit for bit.
    pub fn write_csv(&self, path: &Path, schema: &CsvSchema) -> Result<()> {
        if schema.covariate_cols.len() != self.covariate_dim() {
            return Err(Error::Schema(format!(
                "schema names {} covariates, dataset has {}",
                schema.covariate_cols.len(),
                self.covariate_dim()
            )));
        }
        let mut out = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut header = vec![schema.response_col.clone()];
        header.extend(schema.covariate_cols.iter().cloned());
        let mut text = header.join(",");
        text.push('\n');
        for (y, x) in self.iter() {
            text.push_str(&format!("{y:.16e}"));
            for v in x.unwrap_or(&[]) {
                text.push_str(&format!(",{v:.16e}"));
            }
            text.push('\n');
        }
        out.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Round-half-up of `n * tau / 100`.
pub fn contaminated_count(n: usize, tau_percent: f64) -> usize {
    (n as f64 * tau_percent / 100.0 + 0.5).floor() as usize
}

/// Draws `n` values from `N(mean, sd^2)` and adds `shift` to exactly
/// `round(n * tau / 100)` distinct, uniformly chosen observations.
pub fn simulate_contaminated_gaussian(
    n: usize,
    mean: f64,
    sd: f64,
    tau_percent: f64,
    shift: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(0.0..=100.0).contains(&tau_percent) {
        return Err(Error::InvalidTau(tau_percent));
    }
    let normal = Normal::new(mean, sd)
        .map_err(|e| Error::Config(format!("invalid normal parameters: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let k = contaminated_count(n, tau_percent).min(n);
    let mut indices = sample_indices(&mut rng, n, k).into_vec();
    indices.sort_unstable();
    for &i in &indices {
        y[i] += shift;
    }
    Ok(Dataset {
        y,
        x: None,
        provenance: Provenance::Synthetic { seed },
        contamination: Some(Contamination {
            tau_percent,
            shift,
            indices,
        }),
    })
}

/// Reads a headered, comma-separated file of reals.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            column: 0,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Parse {
            row: 0,
            column: 0,
            message: "missing header row".into(),
        });
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in {path:?}")))
    };
    let y_col = find(&schema.response_col)?;
    let x_cols = schema
        .covariate_cols
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut xs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Header is row 1, so data rows start at 2.
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        let field = |col: usize| -> Result<f64> {
            let raw = record.get(col).ok_or_else(|| Error::Parse {
                row,
                column: col + 1,
                message: "missing field".into(),
            })?;
            raw.parse::<f64>().map_err(|e| Error::Parse {
                row,
                column: col + 1,
                message: format!("`{raw}`: {e}"),
            })
        };
        y.push(field(y_col)?);
        for &c in &x_cols {
            xs.push(field(c)?);
        }
    }
    if y.is_empty() {
        return Err(Error::Parse {
            row: 1,
            column: 0,
            message: "no data rows".into(),
        });
    }
    let x = if x_cols.is_empty() {
        None
    } else {
        Some(Covariates::new(x_cols.len(), xs)?)
    };
    Ok(Dataset {
        y,
        x,
        provenance: Provenance::File {
            path: path.to_path_buf(),
        },
        contamination: None,
    })
}

/// Bootstrap index multiset: `n` draws with replacement from `0..n`.
pub fn bootstrap_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Resamples rows with replacement; covariate rows travel with responses.
pub fn bootstrap_resample(data: &Dataset, seed: u64) -> Result<Dataset> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = bootstrap_indices(data.len(), &mut rng);
    let mut out = data.select(&idx);
    out.provenance = Provenance::Bootstrap { seed };
    Ok(out)
}
