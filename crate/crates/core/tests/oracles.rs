mod support;

use driverid_core::features::histogram::trimmed_histogram;
use driverid_core::features::stats::{pairwise_correlation, window_mean, window_variance};
use driverid_core::models::Knn;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INSTANCES: u64 = 200;

#[test]
fn histogram_matches_bin_scan() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..400);
        let bins = rng.random_range(1..120);
        let keep = if rng.random_bool(0.5) { 0.95 } else { rng.random_range(0.05..=1.0) };
        let x = support::signal(&mut rng, n);
        let got = trimmed_histogram(&x, bins, keep).ok();
        assert_eq!(got, support::histogram(&x, bins, keep), "seed {seed}");
    }
}

#[test]
fn mean_and_variance_match_two_pass() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..600);
        let w = support::window(&mut rng, n);
        let (means, vars) = (window_mean(&w), window_variance(&w));
        for c in 0..6 {
            let (m, v) = support::mean_variance(&w.channels[c]);
            let scale = w.channels[c].iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(support::close(means[c], m, 1e-12, scale), "seed {seed} mean {c}");
            assert!(support::close(vars[c], v, 1e-12, scale * scale), "seed {seed} var {c}");
        }
    }
}

#[test]
fn correlation_matches_definition() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..600);
        let w = support::window(&mut rng, n);
        let got = pairwise_correlation(&w);
        let want = support::correlations(&w.channels);
        for (k, (a, b)) in got.iter().zip(&want).enumerate() {
            assert!(support::close(*a, *b, 1e-12, 1.0), "seed {seed} pair {k}: {a} vs {b}");
        }
    }
}

#[test]
fn knn_matches_full_sort() {
    for seed in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(3..80);
        let dims = rng.random_range(1..6);
        let n_classes = rng.random_range(2..5).min(n);
        let grid = rng.random_bool(0.5);
        let (rows, targets) = support::labeled_points(&mut rng, n, dims, n_classes, grid);
        let k = rng.random_range(1..=n.min(9));
        let knn = Knn::fit(&rows, &targets, n_classes, k).unwrap();
        for _ in 0..5 {
            let (q, _) = support::labeled_points(&mut rng, 1, dims, 1, grid);
            assert_eq!(
                knn.predict(&q[0]),
                support::knn_predict(&rows, &targets, n_classes, k, &q[0]),
                "seed {seed}"
            );
        }
    }
}

proptest! {
    #[test]
    fn histogram_oracle_on_arbitrary_signals(
        x in prop::collection::vec(-1e3f64..1e3, 2..200),
        bins in 1usize..64,
        keep in 0.05f64..=1.0,
    ) {
        prop_assert_eq!(trimmed_histogram(&x, bins, keep).ok(), support::histogram(&x, bins, keep));
    }
}
