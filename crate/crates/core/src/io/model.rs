//! Versioned JSON model documents:
//!
//! ```json
//! {"format_version": 1, "family": "svm", "model": {...}, "metadata": {...}}
//! ```
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! reloaded model predicts bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::models::{ModelFamily, TrainedModel};

pub const FORMAT_VERSION: u64 = 1;
pub const SUPPORTED_VERSIONS: &[u64] = &[1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u64,
    #[serde(flatten)]
    pub model: TrainedModel,
    /// Free-form provenance (seed, resolved config, dataset).
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub metadata: Value,
}

impl ModelDocument {
    pub fn new(model: TrainedModel, metadata: Value) -> Self {
        ModelDocument { format_version: FORMAT_VERSION, model, metadata }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Document(e.to_string()))
    }

    /// Parse a document, checking the version and family tag before the body.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::Document(format!("line {}: {e}", e.line())))?;
        let obj = value.as_object().ok_or_else(|| Error::Document("model document must be a JSON object".into()))?;
        let version = obj
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Document("missing `format_version`".into()))?;
        if !SUPPORTED_VERSIONS.contains(&version) {
            return Err(Error::UnsupportedVersion { found: version, supported: SUPPORTED_VERSIONS.to_vec() });
        }
        let family =
            obj.get("family").and_then(Value::as_str).ok_or_else(|| Error::Document("missing `family`".into()))?;
        let family: ModelFamily = family.parse()?;
        let body = obj.get("model").cloned().ok_or_else(|| Error::Document("missing `model`".into()))?;
        let model = serde_json::from_value(json!({ "family": family, "model": body }))
            .map_err(|e| Error::Document(format!("{family} model: {e}")))?;
        Ok(ModelDocument {
            format_version: version,
            model,
            metadata: obj.get("metadata").cloned().unwrap_or(Value::Null),
        })
    }
}

pub fn save_model(path: &Path, doc: &ModelDocument) -> Result<()> {
    write_text(path, &doc.to_json()?)
}

pub fn load_model(path: &Path) -> Result<ModelDocument> {
    ModelDocument::from_json(&read_text(path)?).map_err(|e| match e {
        Error::Document(reason) => Error::Document(format!("{}: {reason}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Classifier;
    use crate::tensor::Tensor;

    fn linear_doc() -> String {
        r#"{
          "format_version": 1,
          "family": "svm",
          "model": {
            "n_classes": 2,
            "pairs": [{
              "positive": 0, "negative": 1,
              "model": {"kernel": {"type": "linear"}, "C": 1.0, "dim": 2, "bias": -0.5, "weights": [2.0, -1.0]}
            }]
          }
        }"#
        .to_string()
    }

    #[test]
    fn hand_built_linear_document_predicts_w_dot_x_plus_b() {
        let doc = ModelDocument::from_json(&linear_doc()).unwrap();
        let TrainedModel::Svm(ens) = &doc.model else { panic!("family") };
        let pair = ens.pair(0, 1).unwrap();
        assert_eq!(pair.decision_value(&[1.0, 1.0]).unwrap(), 0.5);
        assert_eq!(pair.decision_value(&[0.0, 1.0]).unwrap(), -1.5);
        assert_eq!(doc.model.predict(&Tensor::vector(vec![1.0, 1.0]).unwrap()).unwrap(), 0);
        assert_eq!(doc.model.predict(&Tensor::vector(vec![0.0, 1.0]).unwrap()).unwrap(), 1);
    }

    #[test]
    fn version_and_family_errors_are_structured() {
        let v2 = linear_doc().replace("\"format_version\": 1", "\"format_version\": 2");
        match ModelDocument::from_json(&v2) {
            Err(e @ Error::UnsupportedVersion { .. }) => assert!(e.to_string().contains('1')),
            other => panic!("{other:?}"),
        }
        let tree = linear_doc().replace("\"svm\"", "\"tree\"");
        assert!(matches!(ModelDocument::from_json(&tree), Err(Error::UnknownFamily(f)) if f == "tree"));
        let text = linear_doc();
        assert!(matches!(ModelDocument::from_json(&text[..text.len() / 2]), Err(Error::Document(_))));
    }

    #[test]
    fn round_trip_is_exact() {
        let doc = ModelDocument::from_json(&linear_doc()).unwrap();
        let again = ModelDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(doc, again);
        assert_eq!(again.model.family(), ModelFamily::Svm);
    }
}
