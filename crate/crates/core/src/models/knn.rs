use serde::{Deserialize, Serialize};

use super::dataset::argmax_first;
use super::ModelError;

/// k-nearest-neighbour classifier with Euclidean distance.
///
/// Equal distances are ordered by training row index; equal votes go to the
/// class listed first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub n_classes: usize,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
}

impl Knn {
    pub fn fit(rows: &[Vec<f64>], targets: &[usize], n_classes: usize, k: usize) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::Config("k must be at least 1".into()));
        }
        if k > rows.len() {
            return Err(ModelError::Config(format!(
                "k = {k} exceeds the {} training rows",
                rows.len()
            )));
        }
        Ok(Self {
            k,
            n_classes,
            rows: rows.to_vec(),
            targets: targets.to_vec(),
        })
    }

    fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (Self::squared_distance(r, x), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < scored.len() {
            scored.select_nth_unstable_by(self.k - 1, cmp);
            scored.truncate(self.k);
        }
        scored.sort_by(cmp);
        scored.into_iter().map(|(_, i)| i).collect()
    }

    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for i in self.neighbours(x) {
            counts[self.targets[i]] += 1;
        }
        counts
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_first(&self.votes(x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.votes(x)
            .into_iter()
            .map(|c| c as f64 / self.k as f64)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<usize>) {
        let rows = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![5.0, 5.0],
            vec![6.0, 5.0],
            vec![5.0, 6.0],
        ];
        (rows, vec![0, 0, 1, 1, 1])
    }

    #[test]
    fn exact_match_with_k_one() {
        let (rows, targets) = data();
        let knn = Knn::fit(&rows, &targets, 2, 1).unwrap();
        for (r, t) in rows.iter().zip(&targets) {
            assert_eq!(knn.predict(r), *t);
        }
    }

    #[test]
    fn all_rows_gives_global_majority() {
        let (rows, targets) = data();
        let knn = Knn::fit(&rows, &targets, 2, rows.len()).unwrap();
        assert_eq!(knn.predict(&[0.0, 0.0]), 1);
        assert_eq!(knn.predict(&[-100.0, 3.0]), 1);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let rows = vec![vec![1.0], vec![-1.0]];
        let knn = Knn::fit(&rows, &[1, 0], 2, 1).unwrap();
        assert_eq!(knn.neighbours(&[0.0]), vec![0]);
        assert_eq!(knn.predict(&[0.0]), 1);
    }

    #[test]
    fn vote_ties_prefer_first_class() {
        let rows = vec![vec![1.0], vec![-1.0]];
        let knn = Knn::fit(&rows, &[1, 0], 2, 2).unwrap();
        assert_eq!(knn.predict(&[0.3]), 0);
    }

    #[test]
    fn rejects_bad_k() {
        let (rows, targets) = data();
        assert!(Knn::fit(&rows, &targets, 2, 0).is_err());
        assert!(Knn::fit(&rows, &targets, 2, 6).is_err());
    }
}
