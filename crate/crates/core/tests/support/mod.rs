//! Brute-force reference implementations and instance generators shared by
//! the oracle tests and the acceptance suite. Written directly from the
//! definitions, without reusing library code.

#![allow(dead_code)]

use driverid_core::segment::{Partition, Window};
use rand::{Rng, RngCore};

/// Linear-interpolation quantile, `h = (n − 1) p`.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * p;
    let i = h.floor() as usize;
    let f = h - i as f64;
    if f == 0.0 || i + 1 == v.len() {
        v[i]
    } else {
        v[i] + f * (v[i + 1] - v[i])
    }
}

/// Bin occupancy by scanning every bin's edges for every sample.
pub fn histogram_counts(values: &[f64], bins: usize, keep: f64) -> Vec<usize> {
    let tail = (1.0 - keep) / 2.0;
    let lo = quantile(values, tail);
    let hi = quantile(values, 1.0 - tail);
    let mut counts = vec![0usize; bins];
    for &x in values {
        if lo == hi {
            if x == lo {
                counts[0] += 1;
            }
            continue;
        }
        if x < lo || x > hi {
            continue;
        }
        let edge = |k: usize| lo + (hi - lo) * (k as f64 / bins as f64);
        for (k, slot) in counts.iter_mut().enumerate() {
            let inside = if k + 1 == bins {
                x >= edge(k) && x <= hi
            } else {
                x >= edge(k) && x < edge(k + 1)
            };
            if inside {
                *slot += 1;
                break;
            }
        }
    }
    counts
}

/// `None` when no sample falls inside the trimmed range.
pub fn histogram(values: &[f64], bins: usize, keep: f64) -> Option<Vec<f64>> {
    let counts = histogram_counts(values, bins, keep);
    let total: usize = counts.iter().sum();
    (total > 0).then(|| counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// Two-pass mean and population variance.
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Pearson correlation over pairs `(i, j)`, `i < j`; 0 when either side is constant.
pub fn correlations(channels: &[Vec<f64>; 6]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..6 {
        for j in i + 1..6 {
            let constant = |v: &Vec<f64>| v.iter().all(|x| *x == v[0]);
            let (mx, vx) = mean_variance(&channels[i]);
            let (my, vy) = mean_variance(&channels[j]);
            if constant(&channels[i]) || constant(&channels[j]) {
                out.push(0.0);
                continue;
            }
            let n = channels[i].len() as f64;
            let cov = channels[i]
                .iter()
                .zip(&channels[j])
                .map(|(x, y)| (x - mx) * (y - my))
                .sum::<f64>()
                / n;
            out.push(cov / (vx.sqrt() * vy.sqrt()));
        }
    }
    out
}

/// kNN by sorting every training row by `(distance, index)`; ties in votes
/// go to the lowest class index.
pub fn knn_predict(rows: &[Vec<f64>], targets: &[usize], n_classes: usize, k: usize, x: &[f64]) -> usize {
    let mut scored: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in &scored[..k] {
        votes[targets[i]] += 1;
    }
    let best = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == best).unwrap()
}

/// `|a − b| ≤ tol · scale`.
pub fn close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * scale.max(f64::MIN_POSITIVE)
}

/// A signal of length `n` drawn from one of several shapes: continuous,
/// heavily tied (small integers), constant, or mostly constant with outliers.
pub fn signal(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    match rng.random_range(0..4) {
        0 => {
            let offset = rng.random_range(-20.0..20.0);
            let scale = 10f64.powf(rng.random_range(-2.0..2.0));
            (0..n).map(|_| offset + scale * rng.random_range(-1.0..1.0)).collect()
        }
        1 => (0..n).map(|_| rng.random_range(-3i32..4) as f64).collect(),
        2 => vec![rng.random_range(-5.0..5.0); n],
        _ => {
            let base = rng.random_range(-5.0..5.0);
            (0..n)
                .map(|_| if rng.random_bool(0.1) { base + rng.random_range(-50.0..50.0) } else { base })
                .collect()
        }
    }
}

pub fn window(rng: &mut impl RngCore, n: usize) -> Window {
    let channels: [Vec<f64>; 6] = std::array::from_fn(|_| signal(rng, n));
    Window {
        driver_id: "d".into(),
        start_t: 0.0,
        end_t: n as f64 * 0.5,
        channels,
        partition: Partition::Train,
    }
}

/// Random classification data; `grid` makes coordinates small integers so
/// distance ties are common.
pub fn labeled_points(
    rng: &mut impl Rng,
    n: usize,
    dims: usize,
    n_classes: usize,
    grid: bool,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let point = |rng: &mut dyn RngCore| -> Vec<f64> {
        (0..dims)
            .map(|_| {
                if grid {
                    rng.random_range(0i32..3) as f64
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect()
    };
    let rows = (0..n).map(|_| point(rng)).collect();
    let targets = (0..n).map(|i| if i < n_classes { i } else { rng.random_range(0..n_classes) }).collect();
    (rows, targets)
}
