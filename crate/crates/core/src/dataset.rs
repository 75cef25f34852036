//! Columnar dataset with one binary outcome and numeric covariates.
//!
//! Covariate cells that are empty, non-numeric or non-finite are stored as
//! `NaN` and treated as missing. Missing values are removed per pair of
//! covariates (see [`pair_view`]), never for the dataset as a whole.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Outcome,
    Covariate,
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: ColumnRole,
}

/// Which column is the outcome and which columns take part as covariates.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub outcome: String,
    /// When set, only these columns are considered as covariates.
    pub include: Option<Vec<String>>,
    pub exclude: Vec<String>,
}

impl SchemaConfig {
    pub fn new(outcome: impl Into<String>) -> Self {
        Self {
            outcome: outcome.into(),
            include: None,
            exclude: Vec::new(),
        }
    }

    pub fn exclude<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.exclude.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn include<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.include = Some(names.into_iter().map(Into::into).collect());
        self
    }
}

#[derive(Debug, Clone)]
struct Covariate {
    name: String,
    values: Vec<f64>,
}

/// Immutable table. Construct with [`load_csv`], [`Dataset::from_reader`] or
/// [`Dataset::from_columns`].
#[derive(Debug, Clone)]
pub struct Dataset {
    columns: Vec<ColumnSpec>,
    outcome_name: String,
    outcome: Vec<u8>,
    covariates: Vec<Covariate>,
}

/// The rows of one `(x_j, x_c)` pair that have every value present.
#[derive(Debug, Clone, PartialEq)]
pub struct PairView {
    pub x_j_name: String,
    pub x_c_name: String,
    pub x_j: Vec<f64>,
    pub x_c: Vec<f64>,
    pub y: Vec<f64>,
    /// Index of each surviving row in the source dataset.
    pub rows: Vec<usize>,
}

impl PairView {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn outcome_is_constant(&self) -> bool {
        match self.y.first() {
            Some(&first) => self.y.iter().all(|&v| v == first),
            None => true,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    Dataset::from_reader(file, schema)
}

pub fn pair_view(dataset: &Dataset, x_j_name: &str, x_c_name: &str) -> Result<PairView> {
    dataset.pair_view(x_j_name, x_c_name)
}

fn parse_outcome(cell: &str) -> Option<u8> {
    match cell.trim() {
        "0" => Some(0),
        "1" => Some(1),
        s if s.eq_ignore_ascii_case("false") => Some(0),
        s if s.eq_ignore_ascii_case("true") => Some(1),
        _ => None,
    }
}

fn parse_covariate(cell: &str) -> f64 {
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => v,
        _ => f64::NAN,
    }
}

impl Dataset {
    /// Parse RFC-4180 CSV with a header row.
    pub fn from_reader<R: Read>(reader: R, schema: &SchemaConfig) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();

        let mut seen = HashSet::new();
        for name in &header {
            if name.is_empty() {
                return Err(Error::Schema("empty column name in header".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name '{name}'")));
            }
        }
        let outcome_idx = header
            .iter()
            .position(|h| *h == schema.outcome)
            .ok_or_else(|| Error::Schema(format!("outcome column '{}' not found", schema.outcome)))?;
        for name in schema.include.iter().flatten().chain(&schema.exclude) {
            if !seen.contains(name.as_str()) {
                return Err(Error::Schema(format!("column '{name}' named in schema is not in the header")));
            }
        }

        let wanted = |name: &str| {
            name != schema.outcome
                && !schema.exclude.iter().any(|e| e == name)
                && schema
                    .include
                    .as_ref()
                    .is_none_or(|inc| inc.iter().any(|i| i == name))
        };

        let mut outcome = Vec::new();
        let mut raw: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Parse {
                row,
                line: row + 1,
                column: String::new(),
                message: e.to_string(),
            })?;
            let cell = record.get(outcome_idx).unwrap_or("");
            let y = parse_outcome(cell).ok_or_else(|| Error::Parse {
                row,
                line: record.position().map_or(row + 1, |p| p.line() as usize),
                column: schema.outcome.clone(),
                message: format!("outcome must be 0/1 or true/false, got '{cell}'"),
            })?;
            outcome.push(y);
            for (c, values) in raw.iter_mut().enumerate() {
                if c != outcome_idx && wanted(&header[c]) {
                    values.push(parse_covariate(record.get(c).unwrap_or("")));
                }
            }
        }
        if outcome.is_empty() {
            return Err(Error::Schema("no data rows".into()));
        }

        let mut columns = Vec::with_capacity(header.len());
        let mut covariates = Vec::new();
        for (c, (name, values)) in header.iter().zip(raw).enumerate() {
            let role = if c == outcome_idx {
                ColumnRole::Outcome
            } else if !wanted(name) {
                ColumnRole::Ignored
            } else if values.iter().all(|v| v.is_nan()) {
                log::warn!("column '{name}' has no numeric values; ignoring it");
                ColumnRole::Ignored
            } else {
                covariates.push(Covariate {
                    name: name.clone(),
                    values,
                });
                ColumnRole::Covariate
            };
            columns.push(ColumnSpec {
                name: name.clone(),
                role,
            });
        }

        Ok(Self {
            columns,
            outcome_name: schema.outcome.clone(),
            outcome,
            covariates,
        })
    }

    /// Build a dataset from in-memory columns. Non-finite covariate values
    /// are treated as missing.
    pub fn from_columns(
        outcome_name: impl Into<String>,
        outcome: Vec<u8>,
        covariates: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let outcome_name = outcome_name.into();
        if outcome.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(pos) = outcome.iter().position(|&y| y > 1) {
            return Err(Error::Parse {
                row: pos + 1,
                line: pos + 2,
                column: outcome_name,
                message: format!("outcome must be 0 or 1, got {}", outcome[pos]),
            });
        }
        let mut seen = HashSet::new();
        seen.insert(outcome_name.clone());
        let mut columns = vec![ColumnSpec {
            name: outcome_name.clone(),
            role: ColumnRole::Outcome,
        }];
        let mut covs = Vec::with_capacity(covariates.len());
        for (name, values) in covariates {
            if name.is_empty() || !seen.insert(name.clone()) {
                return Err(Error::Schema(format!("invalid or duplicate column name '{name}'")));
            }
            if values.len() != outcome.len() {
                return Err(Error::LengthMismatch(values.len(), outcome.len()));
            }
            let values = values
                .into_iter()
                .map(|v| if v.is_finite() { v } else { f64::NAN })
                .collect();
            columns.push(ColumnSpec {
                name: name.clone(),
                role: ColumnRole::Covariate,
            });
            covs.push(Covariate { name, values });
        }
        Ok(Self {
            columns,
            outcome_name,
            outcome,
            covariates: covs,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome
    }

    pub fn covariate_names(&self) -> Vec<&str> {
        self.covariates.iter().map(|c| c.name.as_str()).collect()
    }

    /// Values of a covariate column; missing cells are `NaN`.
    pub fn covariate(&self, name: &str) -> Option<&[f64]> {
        self.covariates
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn pair_view(&self, x_j_name: &str, x_c_name: &str) -> Result<PairView> {
        let x_j = self
            .covariate(x_j_name)
            .ok_or_else(|| Error::UnknownColumn(x_j_name.to_string()))?;
        let x_c = self
            .covariate(x_c_name)
            .ok_or_else(|| Error::UnknownColumn(x_c_name.to_string()))?;
        if x_j_name == x_c_name {
            return Err(Error::SameColumn(x_j_name.to_string()));
        }
        let mut view = PairView {
            x_j_name: x_j_name.to_string(),
            x_c_name: x_c_name.to_string(),
            x_j: Vec::with_capacity(self.n_rows()),
            x_c: Vec::with_capacity(self.n_rows()),
            y: Vec::with_capacity(self.n_rows()),
            rows: Vec::with_capacity(self.n_rows()),
        };
        for (i, ((&a, &b), &y)) in x_j.iter().zip(x_c).zip(&self.outcome).enumerate() {
            if a.is_finite() && b.is_finite() {
                view.x_j.push(a);
                view.x_c.push(b);
                view.y.push(f64::from(y));
                view.rows.push(i);
            }
        }
        Ok(view)
    }

    /// SHA-256 over the parsed content (names, roles of used columns, and
    /// value bit patterns). Independent of the file path and of formatting
    /// differences that parse to the same numbers.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        let put_str = |h: &mut Sha256, s: &str| {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        hasher.update((self.n_rows() as u64).to_le_bytes());
        put_str(&mut hasher, &self.outcome_name);
        hasher.update(&self.outcome);
        for cov in &self.covariates {
            put_str(&mut hasher, &cov.name);
            for v in &cov.values {
                let bits = if v.is_nan() { f64::NAN.to_bits() } else { v.to_bits() };
                hasher.update(bits.to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    /// Write the outcome and covariate columns as CSV readable by
    /// [`Dataset::from_reader`]. Missing values become empty cells.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![self.outcome_name.as_str()];
        header.extend(self.covariates.iter().map(|c| c.name.as_str()));
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for i in 0..self.n_rows() {
            record.clear();
            record.push(self.outcome[i].to_string());
            for cov in &self.covariates {
                let v = cov.values[i];
                // `{:?}` is the shortest representation that round-trips.
                record.push(if v.is_nan() { String::new() } else { format!("{v:?}") });
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}
