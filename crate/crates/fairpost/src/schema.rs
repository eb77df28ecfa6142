//! Declarative dataset schema: which column is the label, which is the
//! protected attribute, how each feature is encoded, and which raw rows
//! to keep.

use std::path::Path;

use crate::error::{self, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: FeatureKind,
}

/// Raw-value predicate on one column. Any combination of clauses may be
/// set; a row must satisfy all of them to stay.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct RowFilter {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep_values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SchemaConfig {
    pub target_column: String,
    /// Raw target value mapped to y = 1; everything else becomes 0.
    pub positive_label: String,
    pub protected_column: String,
    /// Exact raw value defining the privileged group (a = 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privileged_value: Option<String>,
    /// Numeric rule: a = 1 iff value ≥ threshold. Exactly one of this and
    /// `privileged_value` must be set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privileged_threshold: Option<f64>,
    pub feature_columns: Vec<FeatureColumn>,
    #[serde(default)]
    pub row_filters: Vec<RowFilter>,
    /// Raw cell values treated as missing in any schema-referenced column.
    #[serde(default)]
    pub missing_values: Vec<String>,
    #[serde(default = "default_missing_policy")]
    pub missing_policy: String,
}

fn default_missing_policy() -> String {
    String::from("drop_row")
}

impl SchemaConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.privileged_value, &self.privileged_threshold) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(Error::Schema(String::from(
                    "exactly one of privileged_value and privileged_threshold must be set",
                )));
            }
        }
        if self.missing_policy != "drop_row" {
            return Err(Error::Schema(format!(
                "unsupported missing_policy {:?}; only \"drop_row\" is implemented",
                self.missing_policy
            )));
        }
        if self.feature_columns.is_empty() {
            return Err(Error::Schema(String::from("feature_columns is empty")));
        }
        for (i, f) in self.feature_columns.iter().enumerate() {
            if f.name == self.target_column || f.name == self.protected_column {
                return Err(Error::Schema(format!(
                    "column {:?} cannot be both a feature and the target/protected column",
                    f.name
                )));
            }
            if self.feature_columns[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Schema(format!("duplicate feature column {:?}", f.name)));
            }
        }
        Ok(())
    }

    /// Every column name the schema touches: target, protected, features,
    /// and filter columns, deduplicated in first-mention order.
    pub fn referenced_columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = vec![&self.target_column, &self.protected_column];
        for f in &self.feature_columns {
            cols.push(&f.name);
        }
        for f in &self.row_filters {
            cols.push(&f.column);
        }
        let mut seen = Vec::with_capacity(cols.len());
        for c in cols {
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        seen
    }
}

/// Parses and validates a schema JSON file.
pub fn load_schema(path: &Path) -> Result<SchemaConfig> {
    let text = error::read_to_string(path)?;
    let schema: SchemaConfig = serde_json::from_str(&text)?;
    schema.validate()?;
    Ok(schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> SchemaConfig {
        SchemaConfig {
            target_column: String::from("label"),
            positive_label: String::from("yes"),
            protected_column: String::from("group"),
            privileged_value: Some(String::from("p")),
            privileged_threshold: None,
            feature_columns: vec![FeatureColumn {
                name: String::from("f1"),
                kind: FeatureKind::Numeric,
            }],
            row_filters: vec![],
            missing_values: vec![],
            missing_policy: default_missing_policy(),
        }
    }

    #[test]
    fn minimal_schema_validates() {
        minimal().validate().unwrap();
    }

    #[test]
    fn both_privilege_rules_rejected() {
        let mut s = minimal();
        s.privileged_threshold = Some(25.0);
        assert!(matches!(s.validate(), Err(Error::Schema(_))));
        s.privileged_value = None;
        s.validate().unwrap();
        s.privileged_threshold = None;
        assert!(s.validate().is_err());
    }

    #[test]
    fn target_as_feature_rejected() {
        let mut s = minimal();
        s.feature_columns.push(FeatureColumn {
            name: String::from("label"),
            kind: FeatureKind::Numeric,
        });
        assert!(s.validate().is_err());
    }

    #[test]
    fn duplicate_feature_rejected() {
        let mut s = minimal();
        s.feature_columns.push(FeatureColumn {
            name: String::from("f1"),
            kind: FeatureKind::Categorical,
        });
        assert!(s.validate().is_err());
    }

    #[test]
    fn unknown_missing_policy_rejected() {
        let mut s = minimal();
        s.missing_policy = String::from("impute");
        assert!(s.validate().is_err());
    }

    #[test]
    fn referenced_columns_dedupe_in_order() {
        let mut s = minimal();
        s.row_filters.push(RowFilter {
            column: String::from("group"),
            keep_values: Some(vec![String::from("p"), String::from("q")]),
            ..RowFilter::default()
        });
        s.row_filters.push(RowFilter {
            column: String::from("extra"),
            drop_values: Some(vec![String::from("-1")]),
            ..RowFilter::default()
        });
        assert_eq!(s.referenced_columns(), vec!["label", "group", "f1", "extra"]);
    }

    #[test]
    fn schema_json_round_trip() {
        let s = minimal();
        let text = serde_json::to_string(&s).unwrap();
        let back: SchemaConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
