//! Credit-scoring CSV ingestion.
//!
//! Rows with a missing cell (empty, `NA`, `NaN`) are dropped. Features are
//! z-scored with population statistics of the surviving rows, clamped into
//! `[-B, B]`, and an always-one intercept column is appended. The intercept
//! is never strategic and its box is the single point `{1}`.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use drpp_core::{BaseDataset, Normalization, Sample, SampleSpace};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CREDIT_TARGET: &str = "SeriousDlqin2yrs";
pub const CREDIT_FEATURES: [&str; 10] = [
    "RevolvingUtilizationOfUnsecuredLines",
    "age",
    "NumberOfTime30-59DaysPastDueNotWorse",
    "DebtRatio",
    "MonthlyIncome",
    "NumberOfOpenCreditLinesAndLoans",
    "NumberOfTimes90DaysLate",
    "NumberRealEstateLoansOrLines",
    "NumberOfTime60-89DaysPastDueNotWorse",
    "NumberOfDependents",
];
pub const CREDIT_STRATEGIC: [&str; 3] = [
    "RevolvingUtilizationOfUnsecuredLines",
    "NumberOfOpenCreditLinesAndLoans",
    "NumberRealEstateLoansOrLines",
];
pub const INTERCEPT: &str = "intercept";
pub const DEFAULT_BOX: f64 = 5.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty file: no header row")]
    Empty,
    #[error("target column {0:?} not found in header")]
    MissingTarget(String),
    #[error("feature column {0:?} not found in header")]
    MissingColumn(String),
    #[error("strategic column {0:?} is not a feature")]
    UnknownStrategic(String),
    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("row {row}: label {value:?} is not 0 or 1")]
    BadLabel { row: usize, value: String },
    #[error("column {0:?} has no values")]
    AllMissing(String),
    #[error("no complete rows after dropping {dropped} rows with missing values")]
    NoRows { dropped: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSchema {
    pub target: String,
    /// Feature columns in order; `None` takes every column except the target
    /// and unnamed index columns.
    pub features: Option<Vec<String>>,
    pub strategic: Vec<String>,
    pub box_half_width: f64,
}

impl Default for IngestSchema {
    fn default() -> Self {
        Self {
            target: CREDIT_TARGET.into(),
            features: None,
            strategic: CREDIT_STRATEGIC.iter().map(|s| s.to_string()).collect(),
            box_half_width: DEFAULT_BOX,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    pub dataset: BaseDataset,
    pub sample_space: SampleSpace,
    pub dropped_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "NaN" | "nan" | "null")
}

pub fn ingest_credit_csv(path: impl AsRef<Path>, schema: &IngestSchema) -> Result<Ingested, IngestError> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
    ingest_credit_str(&text, schema)
}

pub fn ingest_credit_str(text: &str, schema: &IngestSchema) -> Result<Ingested, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(IngestError::Empty);
    }
    let col = |name: &str| header.iter().position(|h| h == name);
    let target = col(&schema.target).ok_or_else(|| IngestError::MissingTarget(schema.target.clone()))?;
    let features: Vec<String> = match &schema.features {
        Some(f) => f.clone(),
        None => header
            .iter()
            .enumerate()
            .filter(|(j, h)| *j != target && !h.is_empty())
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let feature_cols: Vec<usize> = features
        .iter()
        .map(|f| col(f).ok_or_else(|| IngestError::MissingColumn(f.clone())))
        .collect::<Result<_, _>>()?;
    let strategic_set: HashSet<&str> = schema.strategic.iter().map(String::as_str).collect();
    if let Some(s) = schema.strategic.iter().find(|s| !features.contains(s)) {
        return Err(IngestError::UnknownStrategic(s.clone()));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut seen = vec![false; features.len()];
    let mut dropped = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = r + 2; // 1-based, after the header
        let mut missing = false;
        let mut row = Vec::with_capacity(features.len());
        for (k, &c) in feature_cols.iter().enumerate() {
            let cell = record.get(c).unwrap_or("");
            if is_missing(cell) {
                missing = true;
                continue;
            }
            seen[k] = true;
            let v: f64 = cell.trim().parse().map_err(|_| IngestError::NonNumeric {
                row: row_no,
                column: features[k].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonNumeric {
                    row: row_no,
                    column: features[k].clone(),
                    value: cell.to_string(),
                });
            }
            row.push(v);
        }
        let label_cell = record.get(target).unwrap_or("");
        if missing || is_missing(label_cell) {
            dropped += 1;
            continue;
        }
        let y = match label_cell.trim().parse::<f64>() {
            Ok(v) if v == 0.0 => 0,
            Ok(v) if v == 1.0 => 1,
            _ => {
                return Err(IngestError::BadLabel {
                    row: row_no,
                    value: label_cell.to_string(),
                })
            }
        };
        rows.push(row);
        labels.push(y);
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(IngestError::AllMissing(features[k].clone()));
    }
    if rows.is_empty() {
        return Err(IngestError::NoRows { dropped });
    }
    let strategic = features.iter().map(|f| strategic_set.contains(f.as_str())).collect();
    let (dataset, sample_space) = finish_dataset(rows, labels, features, strategic, schema.box_half_width)
        .map_err(|e| IngestError::Invalid(e.to_string()))?;
    Ok(Ingested {
        dataset,
        sample_space,
        dropped_rows: dropped,
    })
}

/// Column means and population standard deviations; constant columns get
/// scale 1.
pub fn column_stats(rows: &[Vec<f64>]) -> Normalization {
    let d = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            var[j] += (r[j] - mean[j]).powi(2);
        }
    }
    let scale = var
        .iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    Normalization { mean, scale }
}

/// Standardize, clamp to `[-b, b]`, append the intercept and build the
/// matching sample space.
pub(crate) fn finish_dataset(
    mut rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
    mut names: Vec<String>,
    mut strategic: Vec<bool>,
    b: f64,
) -> anyhow::Result<(BaseDataset, SampleSpace)> {
    anyhow::ensure!(b > 0.0 && b.is_finite(), "box half-width must be positive, got {b}");
    let mut stats = column_stats(&rows);
    for r in rows.iter_mut() {
        for (j, v) in r.iter_mut().enumerate() {
            *v = ((*v - stats.mean[j]) / stats.scale[j]).clamp(-b, b);
        }
        r.push(1.0);
    }
    stats.mean.push(0.0);
    stats.scale.push(1.0);
    names.push(INTERCEPT.into());
    strategic.push(false);
    let d = names.len();
    let mut lo = vec![-b; d];
    let mut hi = vec![b; d];
    lo[d - 1] = 1.0;
    hi[d - 1] = 1.0;
    let space = SampleSpace::new(lo, hi, strategic.clone(), true)?;
    let samples = rows.into_iter().zip(labels).map(|(x, y)| Sample::labeled(x, y)).collect();
    let dataset = BaseDataset::new(samples, names, strategic, Some(stats))?;
    Ok((dataset, space))
}
