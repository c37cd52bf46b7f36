//! Binary CART classification tree with Gini impurity.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::argmax_first;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: usize,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_classes: usize,
    pub nodes: Vec<Node>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

struct Best {
    score: f64,
    feature: usize,
    threshold: f64,
}

/// Chooses which features a node may split on.
pub(crate) enum FeaturePolicy<'a, R: Rng> {
    All,
    Sample { per_split: usize, rng: &'a mut R },
}

struct Builder<'a, R: Rng> {
    rows: &'a [Vec<f64>],
    targets: &'a [usize],
    n_classes: usize,
    n_features: usize,
    params: TreeParams,
    policy: FeaturePolicy<'a, R>,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in idx {
            counts[self.targets[i]] += 1;
        }
        counts
    }

    /// Exhaustive scan of midpoints between sorted distinct values of `feature`.
    fn scan_feature(&self, idx: &[usize], feature: usize, parent: &[usize], best: &mut Option<Best>) {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| {
            self.rows[a][feature]
                .total_cmp(&self.rows[b][feature])
                .then(a.cmp(&b))
        });
        let n = order.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut left = vec![0usize; self.n_classes];
        let mut right = parent.to_vec();
        for pos in 0..n - 1 {
            let c = self.targets[order[pos]];
            left[c] += 1;
            right[c] -= 1;
            let (nl, nr) = (pos + 1, n - pos - 1);
            let v = self.rows[order[pos]][feature];
            let v_next = self.rows[order[pos + 1]][feature];
            if v == v_next || nl < min_leaf || nr < min_leaf {
                continue;
            }
            let score = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
            if best.as_ref().is_none_or(|b| score < b.score) {
                let mut threshold = v + (v_next - v) / 2.0;
                if threshold >= v_next {
                    threshold = v;
                }
                *best = Some(Best {
                    score,
                    feature,
                    threshold,
                });
            }
        }
    }

    fn best_split(&mut self, idx: &[usize], parent: &[usize]) -> Option<Best> {
        let mut best = None;
        let n_features = self.n_features;
        let sampled = match &mut self.policy {
            FeaturePolicy::All => None,
            FeaturePolicy::Sample { per_split, rng } if *per_split < n_features => {
                let mut perm: Vec<usize> = (0..n_features).collect();
                perm.shuffle(*rng);
                Some((perm, *per_split))
            }
            FeaturePolicy::Sample { .. } => None,
        };
        match sampled {
            None => {
                for f in 0..n_features {
                    self.scan_feature(idx, f, parent, &mut best);
                }
            }
            Some((perm, per_split)) => {
                let mut first: Vec<usize> = perm[..per_split].to_vec();
                first.sort_unstable();
                for f in first {
                    self.scan_feature(idx, f, parent, &mut best);
                }
                // Keep drawing features until some valid split exists.
                for &f in &perm[per_split..] {
                    if best.is_some() {
                        break;
                    }
                    self.scan_feature(idx, f, parent, &mut best);
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&idx);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: argmax_first(&counts),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_done = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_done || idx.len() < 2 * self.params.min_leaf.max(1) {
            return slot;
        }
        let Some(best) = self.best_split(&idx, &counts) else {
            return slot;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows[i][best.feature] <= best.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        slot
    }
}

impl DecisionTree {
    /// Deterministic CART fit over all features.
    pub fn fit(rows: &[Vec<f64>], targets: &[usize], n_classes: usize, params: TreeParams) -> Self {
        let idx: Vec<usize> = (0..rows.len()).collect();
        Self::fit_with::<rand_chacha::ChaCha8Rng>(rows, targets, n_classes, params, idx, FeaturePolicy::All)
    }

    pub(crate) fn fit_with<R: Rng>(
        rows: &[Vec<f64>],
        targets: &[usize],
        n_classes: usize,
        params: TreeParams,
        idx: Vec<usize>,
        policy: FeaturePolicy<'_, R>,
    ) -> Self {
        let mut builder = Builder {
            rows,
            targets,
            n_classes,
            n_features: rows.first().map_or(0, Vec::len),
            params,
            policy,
            nodes: Vec::new(),
        };
        builder.grow(idx, 0);
        Self {
            n_classes,
            nodes: builder.nodes,
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
