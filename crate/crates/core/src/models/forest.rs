use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::argmax_first;
use super::tree::{DecisionTree, FeaturePolicy, TreeParams};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Defaults to `⌈√dims⌉`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            tree: TreeParams::default(),
            features_per_split: None,
            bootstrap: true,
        }
    }
}

/// Bagged CART trees with per-split feature sampling and majority voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(
        rows: &[Vec<f64>],
        targets: &[usize],
        n_classes: usize,
        params: &ForestParams,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if params.n_trees == 0 {
            return Err(ModelError::Config("n_trees must be at least 1".into()));
        }
        let dims = rows.first().map_or(0, Vec::len);
        let per_split = params
            .features_per_split
            .unwrap_or_else(|| (dims as f64).sqrt().ceil() as usize)
            .clamp(1, dims.max(1));
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let tree_seeds: Vec<u64> = (0..params.n_trees).map(|_| master.random()).collect();
        let n = rows.len();
        let trees = tree_seeds
            .into_iter()
            .map(|tree_seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
                let idx: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let policy = FeaturePolicy::Sample {
                    per_split,
                    rng: &mut rng,
                };
                DecisionTree::fit_with(rows, targets, n_classes, params.tree, idx, policy)
            })
            .collect();
        Ok(Self { n_classes, trees })
    }

    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for t in &self.trees {
            counts[t.predict(x)] += 1;
        }
        counts
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_first(&self.votes(x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let n = self.trees.len() as f64;
        self.votes(x).into_iter().map(|c| c as f64 / n).collect()
    }
}
