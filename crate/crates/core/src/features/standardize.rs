use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureVector};
use crate::segment::Partition;

/// Standard deviations below this are replaced by it.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-dimension z-score transform fitted on training vectors only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits on training-partition vectors; a test vector is rejected.
    pub fn fit(vectors: &[FeatureVector]) -> Result<Self, FeatureError> {
        if let Some(i) = vectors.iter().position(|v| v.partition != Partition::Train) {
            return Err(FeatureError::TestVectorInFit(i));
        }
        let rows: Vec<&[f64]> = vectors.iter().map(|v| v.values.as_slice()).collect();
        Self::fit_rows(&rows)
    }

    pub fn fit_rows(rows: &[&[f64]]) -> Result<Self, FeatureError> {
        if rows.len() < 2 {
            return Err(FeatureError::TooFewVectors(rows.len()));
        }
        let dims = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != dims) {
            return Err(FeatureError::DimensionMismatch {
                expected: dims,
                found: r.len(),
            });
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dims];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dims];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if values.len() != self.dims() {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dims(),
                found: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}
