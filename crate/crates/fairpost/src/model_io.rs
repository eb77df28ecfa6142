//! Versioned JSON envelope for trained models, so a model trained by one
//! invocation can be certified or audited by another.

use std::path::Path;

use fairpost_core::model::Model;

use crate::error::{self, Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// On-disk model document: the model itself plus the feature layout and a
/// hash of the schema it was trained under, checked on load.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelEnvelope {
    pub format_version: u32,
    pub schema_sha256: String,
    pub feature_names: Vec<String>,
    pub model: Model,
}

pub fn save_model(path: &Path, envelope: &ModelEnvelope) -> Result<()> {
    let text = serde_json::to_string_pretty(envelope)?;
    error::write_file(path, &text)
}

pub fn load_model(path: &Path) -> Result<ModelEnvelope> {
    let text = error::read_to_string(path)?;
    let envelope: ModelEnvelope = serde_json::from_str(&text)?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported model format_version {}; this build reads {}",
            envelope.format_version, FORMAT_VERSION
        )));
    }
    Ok(envelope)
}

/// Identifier for a trained model: kind plus a content-hash prefix of its
/// serialized form.
pub fn model_id(model: &Model) -> Result<String> {
    let bytes = serde_json::to_vec(model)?;
    let hash = crate::ingest::sha256_hex(&bytes);
    Ok(format!("{}-{}", model.kind().as_str(), &hash[..8]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fairpost_core::harness::{SyntheticConfig, make_synthetic};
    use fairpost_core::model::{LrConfig, train_logistic};
    use std::path::PathBuf;

    fn temp_path(tag: &str) -> PathBuf {
        std::env::temp_dir().join(format!("fairpost-model-{}-{tag}.json", std::process::id()))
    }

    fn trained() -> Model {
        let ds = make_synthetic(&SyntheticConfig::new(11, 200)).unwrap();
        Model::Lr(train_logistic(&ds, &LrConfig::default()).unwrap())
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let model = trained();
        let envelope = ModelEnvelope {
            format_version: FORMAT_VERSION,
            schema_sha256: String::from("cafe"),
            feature_names: (0..5).map(|j| format!("x{j}")).collect(),
            model: model.clone(),
        };
        let path = temp_path("roundtrip");
        save_model(&path, &envelope).unwrap();
        let back = load_model(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(back, envelope);
        let x = [0.3, -1.0, 0.5, 0.0, 2.0];
        let p0 = model.predict_proba(&x, 0).unwrap();
        let p1 = back.model.predict_proba(&x, 0).unwrap();
        assert_eq!(p0.to_bits(), p1.to_bits());
    }

    #[test]
    fn future_format_version_is_rejected() {
        let envelope = ModelEnvelope {
            format_version: FORMAT_VERSION + 1,
            schema_sha256: String::new(),
            feature_names: vec![],
            model: trained(),
        };
        let path = temp_path("future");
        save_model(&path, &envelope).unwrap();
        let err = load_model(&path).unwrap_err();
        std::fs::remove_file(&path).unwrap();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn model_id_is_stable_and_kind_prefixed() {
        let model = trained();
        let id1 = model_id(&model).unwrap();
        let id2 = model_id(&model).unwrap();
        assert_eq!(id1, id2);
        assert!(id1.starts_with("lr-"));
    }
}
