use super::ModelError;
use crate::features::{FeatureSchema, FeatureVector};
use crate::segment::Partition;

/// Feature rows with driver labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub partitions: Vec<Partition>,
    pub schema: FeatureSchema,
    /// Sorted distinct labels.
    pub class_list: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<String>,
        partitions: Vec<Partition>,
        schema: FeatureSchema,
    ) -> Result<Self, ModelError> {
        if rows.len() != labels.len() || rows.len() != partitions.len() {
            return Err(ModelError::Data(format!(
                "{} rows, {} labels, {} partition tags",
                rows.len(),
                labels.len(),
                partitions.len()
            )));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != schema.len() {
                return Err(ModelError::DimensionMismatch {
                    expected: schema.len(),
                    found: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::Data(format!("row {i} has a non-finite value")));
            }
        }
        let mut class_list = labels.clone();
        class_list.sort();
        class_list.dedup();
        Ok(Self {
            rows,
            labels,
            partitions,
            schema,
            class_list,
        })
    }

    pub fn from_vectors(vectors: &[FeatureVector], schema: &FeatureSchema) -> Result<Self, ModelError> {
        Self::new(
            vectors.iter().map(|v| v.values.clone()).collect(),
            vectors.iter().map(|v| v.driver_id.clone()).collect(),
            vectors.iter().map(|v| v.partition).collect(),
            schema.clone(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Label indices into `class_list`.
    pub fn targets(&self) -> Vec<usize> {
        self.targets_for(&self.class_list)
            .expect("labels are drawn from class_list")
    }

    /// Label indices into an externally supplied class list.
    pub fn targets_for(&self, class_list: &[String]) -> Result<Vec<usize>, ModelError> {
        self.labels
            .iter()
            .map(|l| {
                class_list
                    .binary_search(l)
                    .map_err(|_| ModelError::Data(format!("label `{l}` is not a known class")))
            })
            .collect()
    }
}

/// Index of the largest count; ties go to the lowest index.
pub(crate) fn argmax_first(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}
