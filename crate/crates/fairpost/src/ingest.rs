//! CSV loading under a schema: row filtering, missing-value dropping,
//! one-hot encoding, and label/protected-attribute binarization.

use std::collections::BTreeSet;
use std::path::Path;

use fairpost_core::Dataset;
use sha2::{Digest, Sha256};

use crate::error::{self, Error, Result};
use crate::schema::{FeatureKind, RowFilter, SchemaConfig};

/// A dataset plus the identifiers reports reference it by.
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub dataset_id: String,
    pub schema_sha256: String,
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Schema(format!("column {name:?} not found in CSV header")))
}

fn parse_number(raw: &str, line: u64, column: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::BadNumber {
        line,
        column: String::from(column),
        value: String::from(raw),
    })
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn passes_filter(
    filter: &RowFilter,
    raw: &str,
    line: u64,
) -> Result<bool> {
    if let Some(keep) = &filter.keep_values {
        if !keep.iter().any(|v| v == raw) {
            return Ok(false);
        }
    }
    if let Some(drop) = &filter.drop_values {
        if drop.iter().any(|v| v == raw) {
            return Ok(false);
        }
    }
    if filter.min.is_some() || filter.max.is_some() {
        let v = parse_number(raw, line, &filter.column)?;
        if filter.min.is_some_and(|m| v < m) || filter.max.is_some_and(|m| v > m) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Loads a CSV under the schema: drops rows with missing values in any
/// referenced column or failing a row filter, one-hot encodes categorical
/// features with the lexicographically first category dropped, and
/// binarizes the label and protected attribute. Numeric features pass
/// through raw; standardization happens per split.
pub fn load_csv(path: &Path, schema: &SchemaConfig) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv { path: path.display().to_string(), source })?;
    let headers = reader
        .headers()
        .map_err(|source| Error::Csv { path: path.display().to_string(), source })?
        .clone();

    let target_idx = column_index(&headers, &schema.target_column)?;
    let protected_idx = column_index(&headers, &schema.protected_column)?;
    let feature_idx: Vec<usize> = schema
        .feature_columns
        .iter()
        .map(|f| column_index(&headers, &f.name))
        .collect::<Result<_>>()?;
    let filter_idx: Vec<usize> = schema
        .row_filters
        .iter()
        .map(|f| column_index(&headers, &f.column))
        .collect::<Result<_>>()?;
    let referenced_idx: Vec<usize> = schema
        .referenced_columns()
        .iter()
        .map(|name| column_index(&headers, name))
        .collect::<Result<_>>()?;

    // Pass 1: read everything, drop rows with missing cells or failing a
    // filter clause.
    let mut kept: Vec<csv::StringRecord> = Vec::new();
    'rows: for record in reader.records() {
        let record =
            record.map_err(|source| Error::Csv { path: path.display().to_string(), source })?;
        for &idx in &referenced_idx {
            let raw = record.get(idx).unwrap_or("");
            if schema.missing_values.iter().any(|m| m == raw) {
                continue 'rows;
            }
        }
        let line = record_line(&record);
        for (filter, &idx) in schema.row_filters.iter().zip(&filter_idx) {
            if !passes_filter(filter, record.get(idx).unwrap_or(""), line)? {
                continue 'rows;
            }
        }
        kept.push(record);
    }

    // Pass 2: category universes for one-hot encoding, from retained rows.
    let mut categories: Vec<BTreeSet<String>> =
        vec![BTreeSet::new(); schema.feature_columns.len()];
    for record in &kept {
        for (j, f) in schema.feature_columns.iter().enumerate() {
            if f.kind == FeatureKind::Categorical {
                categories[j].insert(String::from(record.get(feature_idx[j]).unwrap_or("")));
            }
        }
    }
    // Sorted categories with the first dropped as the reference level.
    let levels: Vec<Vec<String>> = categories
        .iter()
        .map(|set| set.iter().skip(1).cloned().collect())
        .collect();

    let mut feature_names = Vec::new();
    let mut numeric_mask = Vec::new();
    for (j, f) in schema.feature_columns.iter().enumerate() {
        match f.kind {
            FeatureKind::Numeric => {
                feature_names.push(f.name.clone());
                numeric_mask.push(true);
            }
            FeatureKind::Categorical => {
                for level in &levels[j] {
                    feature_names.push(format!("{}={}", f.name, level));
                    numeric_mask.push(false);
                }
            }
        }
    }

    // Pass 3: encode.
    let d = feature_names.len();
    let mut x = Vec::with_capacity(kept.len() * d);
    let mut a = Vec::with_capacity(kept.len());
    let mut y = Vec::with_capacity(kept.len());
    for record in &kept {
        let line = record_line(record);
        for (j, f) in schema.feature_columns.iter().enumerate() {
            let raw = record.get(feature_idx[j]).unwrap_or("");
            match f.kind {
                FeatureKind::Numeric => x.push(parse_number(raw, line, &f.name)?),
                FeatureKind::Categorical => {
                    for level in &levels[j] {
                        x.push(f64::from(level == raw));
                    }
                }
            }
        }
        let target_raw = record.get(target_idx).unwrap_or("");
        y.push(u8::from(target_raw == schema.positive_label));
        let protected_raw = record.get(protected_idx).unwrap_or("");
        let ai = match (&schema.privileged_value, schema.privileged_threshold) {
            (Some(v), _) => u8::from(protected_raw == v.as_str()),
            (None, Some(t)) => {
                u8::from(parse_number(protected_raw, line, &schema.protected_column)? >= t)
            }
            (None, None) => unreachable!("schema validated"),
        };
        a.push(ai);
    }

    Ok(Dataset::new(x, a, y, feature_names, numeric_mask)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| String::from("dataset"))
}

/// Stable identifier for a loaded dataset: file stem, dimensions, and a
/// content-hash prefix.
pub fn dataset_id(csv_path: &Path, ds: &Dataset) -> Result<String> {
    let hash = sha256_hex(&error::read_bytes(csv_path)?);
    Ok(format!("{}-n{}-d{}-{}", stem_of(csv_path), ds.n(), ds.d(), &hash[..8]))
}

/// Loads schema and CSV together with the identifiers reports need.
pub fn load_with_ids(csv_path: &Path, schema_path: &Path) -> Result<LoadedDataset> {
    let schema = crate::schema::load_schema(schema_path)?;
    let dataset = load_csv(csv_path, &schema)?;
    let dataset_id = dataset_id(csv_path, &dataset)?;
    let schema_sha256 = sha256_hex(&error::read_bytes(schema_path)?);
    Ok(LoadedDataset { dataset, dataset_id, schema_sha256 })
}
