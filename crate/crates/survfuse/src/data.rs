//! Subject-level survival records from the two data sources and the
//! deterministic restriction of observations to the analysis horizon.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Which study a record was observed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    /// Randomized trial (coded 1 on disk).
    Trial,
    /// Real-world / observational cohort (coded 0 on disk).
    RealWorld,
}

impl Source {
    pub fn code(self) -> u8 {
        match self {
            Source::Trial => 1,
            Source::RealWorld => 0,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Source::Trial),
            0 => Some(Source::RealWorld),
            _ => None,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Trial => write!(f, "trial"),
            Source::RealWorld => write!(f, "real-world"),
        }
    }
}

/// One observation: follow-up time, event indicator, covariates, treatment,
/// and source membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    /// Observed time (min of failure and censoring times), > 0.
    pub time: f64,
    /// True if the failure was observed, false if censored.
    pub event: bool,
    /// Covariate vector; binary covariates coded 0/1.
    pub covariates: Vec<f64>,
    /// True for the active arm.
    pub treated: bool,
    pub source: Source,
}

impl SubjectRecord {
    /// Checks the record invariants: positive finite time, finite covariates.
    pub fn validate(&self) -> Result<(), String> {
        if !self.time.is_finite() || self.time <= 0.0 {
            return Err(format!("time must be finite and > 0, got {}", self.time));
        }
        if let Some(bad) = self.covariates.iter().find(|v| !v.is_finite()) {
            return Err(format!("covariate value {bad} is not finite"));
        }
        Ok(())
    }
}

/// A record restricted to the horizon `L`: observed time truncated at `L`
/// and the event indicator adjusted so that surviving past the horizon
/// counts as an observed (horizon) event.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedRecord {
    /// min(time, horizon), in (0, horizon].
    pub time: f64,
    /// Restricted event indicator: original event, or forced true when the
    /// observed time reaches the horizon.
    pub event: bool,
    pub horizon: f64,
    pub original: SubjectRecord,
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("row {row}: {reason}")]
    InvalidRecord { row: usize, reason: String },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("no {0} records in file")]
    EmptySource(Source),
    #[error("covariate length mismatch at row {row}: expected {expected}")]
    CovariateMismatch { row: usize, expected: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Restricts a record to the horizon `L`.
///
/// If the observed time reaches `L`, the restricted failure time min(T, L)
/// is known to equal `L` and to precede censoring, so the restricted event
/// indicator is true regardless of the original one. Ties `time == L` are
/// treated the same way.
pub fn restrict(record: &SubjectRecord, horizon: f64) -> Result<RestrictedRecord, DataError> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(DataError::InvalidInput(format!(
            "horizon must be finite and > 0, got {horizon}"
        )));
    }
    record
        .validate()
        .map_err(|reason| DataError::InvalidInput(reason))?;
    let reaches = record.time >= horizon;
    Ok(RestrictedRecord {
        time: if reaches { horizon } else { record.time },
        event: record.event || reaches,
        horizon,
        original: record.clone(),
    })
}

/// The pooled analysis set: trial and real-world records with a shared
/// covariate dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<SubjectRecord>,
    p: usize,
    n1: usize,
    n0: usize,
}

impl Dataset {
    /// Builds a dataset, checking every record and the shared dimension.
    pub fn new(records: Vec<SubjectRecord>) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::InvalidInput("dataset has no records".into()));
        }
        let p = records[0].covariates.len();
        let mut n1 = 0;
        let mut n0 = 0;
        for (i, rec) in records.iter().enumerate() {
            rec.validate()
                .map_err(|reason| DataError::InvalidRecord { row: i, reason })?;
            if rec.covariates.len() != p {
                return Err(DataError::CovariateMismatch {
                    row: i,
                    expected: p,
                });
            }
            match rec.source {
                Source::Trial => n1 += 1,
                Source::RealWorld => n0 += 1,
            }
        }
        Ok(Dataset { records, p, n1, n0 })
    }

    pub fn records(&self) -> &[SubjectRecord] {
        &self.records
    }

    /// Covariate dimension.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of trial records.
    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Number of real-world records.
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn source_records(&self, source: Source) -> impl Iterator<Item = &SubjectRecord> {
        self.records.iter().filter(move |r| r.source == source)
    }

    /// Restricts every record to the horizon.
    pub fn restrict_all(&self, horizon: f64) -> Result<Vec<RestrictedRecord>, DataError> {
        self.records.iter().map(|r| restrict(r, horizon)).collect()
    }

    /// Per-dimension (min, max) over all records.
    pub fn covariate_range(&self) -> Vec<(f64, f64)> {
        let mut range = vec![(f64::INFINITY, f64::NEG_INFINITY); self.p];
        for rec in &self.records {
            for (d, &v) in rec.covariates.iter().enumerate() {
                range[d].0 = range[d].0.min(v);
                range[d].1 = range[d].1.max(v);
            }
        }
        range
    }
}

/// Column names mapping a CSV file onto [`SubjectRecord`] fields.
///
/// `time`, `event`, `treat`, `source` are required; `covariates` lists the
/// covariate columns in model order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub time: String,
    pub event: String,
    pub treat: String,
    pub source: String,
    pub covariates: Vec<String>,
}

impl CsvSchema {
    /// Standard column names with the given covariate columns.
    pub fn with_covariates(covariates: Vec<String>) -> Self {
        CsvSchema {
            time: "time".into(),
            event: "event".into(),
            treat: "treat".into(),
            source: "source".into(),
            covariates,
        }
    }
}

fn parse_flag(raw: &str, row: usize, column: &str) -> Result<bool, DataError> {
    match raw.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(DataError::Parse {
            row,
            column: column.to_string(),
            value: other.to_string(),
        }),
    }
}

fn parse_f64(raw: &str, row: usize, column: &str) -> Result<f64, DataError> {
    raw.trim().parse::<f64>().map_err(|_| DataError::Parse {
        row,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

/// Loads a dataset from a headered CSV file.
///
/// Rows are numbered from 1 (the first data row) in diagnostics. The file
/// must contain at least one record from each source.
pub fn load_dataset(path: &Path, schema: &CsvSchema) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let index_of = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let time_idx = index_of(&schema.time)?;
    let event_idx = index_of(&schema.event)?;
    let treat_idx = index_of(&schema.treat)?;
    let source_idx = index_of(&schema.source)?;
    let cov_idx: Vec<usize> = schema
        .covariates
        .iter()
        .map(|c| index_of(c))
        .collect::<Result<_, _>>()?;

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let get = |idx: usize, col: &str| -> Result<&str, DataError> {
            row.get(idx).ok_or_else(|| DataError::Parse {
                row: row_no,
                column: col.to_string(),
                value: "<missing>".into(),
            })
        };
        let record = SubjectRecord {
            time: parse_f64(get(time_idx, &schema.time)?, row_no, &schema.time)?,
            event: parse_flag(get(event_idx, &schema.event)?, row_no, &schema.event)?,
            treated: parse_flag(get(treat_idx, &schema.treat)?, row_no, &schema.treat)?,
            source: {
                let raw = get(source_idx, &schema.source)?;
                let code = parse_f64(raw, row_no, &schema.source)?;
                if code == 1.0 {
                    Source::Trial
                } else if code == 0.0 {
                    Source::RealWorld
                } else {
                    return Err(DataError::Parse {
                        row: row_no,
                        column: schema.source.clone(),
                        value: raw.to_string(),
                    });
                }
            },
            covariates: cov_idx
                .iter()
                .zip(&schema.covariates)
                .map(|(&idx, col)| parse_f64(get(idx, col)?, row_no, col))
                .collect::<Result<_, _>>()?,
        };
        record
            .validate()
            .map_err(|reason| DataError::InvalidRecord { row: row_no, reason })?;
        records.push(record);
    }

    let dataset = Dataset::new(records)?;
    if dataset.n1 == 0 {
        return Err(DataError::EmptySource(Source::Trial));
    }
    if dataset.n0 == 0 {
        return Err(DataError::EmptySource(Source::RealWorld));
    }
    Ok(dataset)
}

/// Writes a dataset in the canonical CSV format (UTF-8, LF, `.` decimals,
/// shortest round-trip float formatting).
pub fn save_dataset(dataset: &Dataset, path: &Path, schema: &CsvSchema) -> Result<(), DataError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = vec![
        schema.time.clone(),
        schema.event.clone(),
        schema.treat.clone(),
        schema.source.clone(),
    ];
    header.extend(schema.covariates.iter().cloned());
    writeln!(out, "{}", header.join(","))?;
    for rec in dataset.records() {
        let mut fields = vec![
            format!("{}", rec.time),
            format!("{}", rec.event as u8),
            format!("{}", rec.treated as u8),
            format!("{}", rec.source.code()),
        ];
        fields.extend(rec.covariates.iter().map(|v| format!("{v}")));
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Default schema for a file whose covariate columns are everything other
/// than the four required ones, in header order.
pub fn infer_schema(path: &Path) -> Result<CsvSchema, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let required = ["time", "event", "treat", "source"];
    for name in required {
        if !headers.iter().any(|h| h == name) {
            return Err(DataError::MissingColumn(name.to_string()));
        }
    }
    let covariates = headers
        .iter()
        .filter(|h| !required.contains(h))
        .map(|h| h.to_string())
        .collect();
    Ok(CsvSchema::with_covariates(covariates))
}
