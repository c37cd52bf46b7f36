//! Classifiers behind one train/predict contract: k-nearest neighbours,
//! CART decision tree, random forest and a multilayer perceptron.
//!
//! A [`TrainedModel`] bundles the classifier with the standardizer fitted on
//! its training rows, so `predict` takes raw feature vectors.

mod dataset;
mod forest;
mod knn;
mod mlp;
mod persist;
mod tree;

pub use dataset::LabeledDataset;
pub use forest::{ForestParams, RandomForest};
pub use knn::Knn;
pub use mlp::{Activation, Dense, Mlp, MlpConfig};
pub use persist::{load_model, load_model_expecting, save_model, MODEL_FORMAT, MODEL_VERSION};
pub use tree::{DecisionTree, Node, TreeParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureError, FeatureSchema, Standardizer};
use crate::segment::Partition;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("unsupported model file: {0}")]
    Format(String),
    #[error("model file parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Knn,
    Dtree,
    Rforest,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Knn, ModelKind::Dtree, ModelKind::Rforest, ModelKind::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::Dtree => "dtree",
            ModelKind::Rforest => "rforest",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| format!("unknown model kind `{s}` (expected knn, dtree, rforest or mlp)"))
    }
}

/// Model kind plus hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    Dtree(TreeParams),
    Rforest(ForestParams),
    Mlp(MlpConfig),
}

fn default_k() -> usize {
    5
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Mlp(MlpConfig::default())
    }
}

impl ModelSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Knn => ModelSpec::Knn { k: default_k() },
            ModelKind::Dtree => ModelSpec::Dtree(TreeParams::default()),
            ModelKind::Rforest => ModelSpec::Rforest(ForestParams::default()),
            ModelKind::Mlp => ModelSpec::Mlp(MlpConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ModelSpec::Knn { k } if *k == 0 => Err(ModelError::Config("k must be at least 1".into())),
            ModelSpec::Dtree(p) if p.min_leaf == 0 => {
                Err(ModelError::Config("min_leaf must be at least 1".into()))
            }
            ModelSpec::Rforest(p) if p.n_trees == 0 || p.tree.min_leaf == 0 => Err(ModelError::Config(
                "n_trees and min_leaf must be at least 1".into(),
            )),
            ModelSpec::Rforest(ForestParams {
                features_per_split: Some(0),
                ..
            }) => Err(ModelError::Config("features_per_split must be at least 1".into())),
            ModelSpec::Mlp(cfg) => cfg.validate(),
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Knn { .. } => ModelKind::Knn,
            ModelSpec::Dtree(_) => ModelKind::Dtree,
            ModelSpec::Rforest(_) => ModelKind::Rforest,
            ModelSpec::Mlp(_) => ModelKind::Mlp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Classifier {
    Knn(Knn),
    Dtree(DecisionTree),
    Rforest(RandomForest),
    Mlp(Mlp),
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Knn(_) => ModelKind::Knn,
            Classifier::Dtree(_) => ModelKind::Dtree,
            Classifier::Rforest(_) => ModelKind::Rforest,
            Classifier::Mlp(_) => ModelKind::Mlp,
        }
    }

    /// Trains on already standardized rows.
    pub fn fit(
        rows: &[Vec<f64>],
        targets: &[usize],
        n_classes: usize,
        spec: &ModelSpec,
        seed: u64,
    ) -> Result<Self, ModelError> {
        Ok(match spec {
            ModelSpec::Knn { k } => Classifier::Knn(Knn::fit(rows, targets, n_classes, *k)?),
            ModelSpec::Dtree(p) => Classifier::Dtree(DecisionTree::fit(rows, targets, n_classes, *p)),
            ModelSpec::Rforest(p) => {
                Classifier::Rforest(RandomForest::fit(rows, targets, n_classes, p, seed)?)
            }
            ModelSpec::Mlp(cfg) => {
                let cfg = MlpConfig {
                    seed: cfg.seed ^ seed,
                    ..cfg.clone()
                };
                Classifier::Mlp(Mlp::fit(rows, targets, n_classes, &cfg)?)
            }
        })
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            Classifier::Knn(m) => m.predict(x),
            Classifier::Dtree(m) => m.predict(x),
            Classifier::Rforest(m) => m.predict(x),
            Classifier::Mlp(m) => m.predict(x),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Classifier::Knn(m) => m.predict_proba(x),
            Classifier::Dtree(m) => {
                let mut p = vec![0.0; m.n_classes];
                p[m.predict(x)] = 1.0;
                p
            }
            Classifier::Rforest(m) => m.predict_proba(x),
            Classifier::Mlp(m) => m.predict_proba(x),
        }
    }

    /// Input dimension the classifier was trained on, when it records one.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            Classifier::Knn(m) => m.rows.first().map(Vec::len),
            Classifier::Mlp(m) => Some(m.input_dim()),
            Classifier::Dtree(_) | Classifier::Rforest(_) => None,
        }
    }
}

/// A classifier with its standardizer, schema and class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub seed: u64,
    pub schema: FeatureSchema,
    pub class_list: Vec<String>,
    pub standardizer: Standardizer,
    pub classifier: Classifier,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.classifier.kind()
    }

    fn prepare(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        if x.len() != self.schema.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.schema.len(),
                found: x.len(),
            });
        }
        Ok(self.standardizer.apply(x)?)
    }

    pub fn predict_index(&self, x: &[f64]) -> Result<usize, ModelError> {
        Ok(self.classifier.predict(&self.prepare(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<&str, ModelError> {
        Ok(&self.class_list[self.predict_index(x)?])
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        Ok(self.classifier.predict_proba(&self.prepare(x)?))
    }

    /// Checks that schema, standardizer, class list and parameters agree.
    pub fn check_consistency(&self) -> Result<(), ModelError> {
        let dims = self.schema.len();
        if self.standardizer.dims() != dims || self.standardizer.std.len() != dims {
            return Err(ModelError::SchemaMismatch(format!(
                "schema has {dims} dimensions, standardizer has {}",
                self.standardizer.dims()
            )));
        }
        if let Some(d) = self.classifier.input_dim() {
            if d != dims {
                return Err(ModelError::SchemaMismatch(format!(
                    "schema has {dims} dimensions, classifier expects {d}"
                )));
            }
        }
        let n_classes = match &self.classifier {
            Classifier::Knn(m) => m.n_classes,
            Classifier::Dtree(m) => m.n_classes,
            Classifier::Rforest(m) => m.n_classes,
            Classifier::Mlp(m) => m.output_dim(),
        };
        if n_classes != self.class_list.len() {
            return Err(ModelError::SchemaMismatch(format!(
                "{} classes listed, classifier has {n_classes}",
                self.class_list.len()
            )));
        }
        Ok(())
    }
}

/// Fits the standardizer and the classifier on training rows.
///
/// Every row must carry the training partition tag; a test row is refused.
pub fn train_model(data: &LabeledDataset, spec: &ModelSpec, seed: u64) -> Result<TrainedModel, ModelError> {
    if let Some(i) = data.partitions.iter().position(|p| *p != Partition::Train) {
        return Err(ModelError::Data(format!(
            "row {i} belongs to the test partition; training uses train rows only"
        )));
    }
    if data.class_list.len() < 2 {
        return Err(ModelError::Data(format!(
            "training needs at least 2 classes, found {}",
            data.class_list.len()
        )));
    }
    spec.validate()?;
    let refs: Vec<&[f64]> = data.rows.iter().map(Vec::as_slice).collect();
    let standardizer = Standardizer::fit_rows(&refs)?;
    let rows = data
        .rows
        .iter()
        .map(|r| standardizer.apply(r))
        .collect::<Result<Vec<_>, _>>()?;
    let classifier = Classifier::fit(&rows, &data.targets(), data.class_list.len(), spec, seed)?;
    Ok(TrainedModel {
        spec: spec.clone(),
        seed,
        schema: data.schema.clone(),
        class_list: data.class_list.clone(),
        standardizer,
        classifier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parses_with_defaults() {
        let spec: ModelSpec = serde_json::from_str(r#"{"kind":"knn"}"#).unwrap();
        assert_eq!(spec, ModelSpec::Knn { k: 5 });
        let spec: ModelSpec = serde_json::from_str(r#"{"kind":"mlp","hidden_layers":[8]}"#).unwrap();
        match spec {
            ModelSpec::Mlp(cfg) => assert_eq!(cfg.hidden_layers, vec![8]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spec_rejects_unknown_keys() {
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"knn","kk":3}"#).is_err());
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"mlp","hiden_layers":[8]}"#).is_err());
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"svm"}"#).is_err());
    }

    #[test]
    fn zero_k_is_invalid() {
        assert!(ModelSpec::Knn { k: 0 }.validate().is_err());
        assert!(ModelSpec::default().validate().is_ok());
    }
}
