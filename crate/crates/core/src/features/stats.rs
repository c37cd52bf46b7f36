use super::FeatureError;
use crate::segment::Window;

/// Number of unordered channel pairs.
pub const PAIR_COUNT: usize = 15;

/// Channel pairs `(i, j)` with `i < j`, in lexicographic order.
pub fn channel_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j)))
}

/// Single-pass mean and population variance (Welford).
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = values.len().max(1) as f64;
    (mean, m2 / n)
}

pub fn window_mean(window: &Window) -> [f64; 6] {
    std::array::from_fn(|c| mean_variance(&window.channels[c]).0)
}

pub fn window_variance(window: &Window) -> [f64; 6] {
    std::array::from_fn(|c| mean_variance(&window.channels[c]).1)
}

/// How the inter-window difference feature is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceMode {
    /// `mean(current) − mean(previous)`.
    #[default]
    MeanDelta,
    /// `sum(current) − mean(previous)`.
    SumMinusMean,
}

pub fn window_difference(current: &Window, previous: Option<&Window>) -> Result<[f64; 6], FeatureError> {
    window_difference_with(current, previous, DifferenceMode::MeanDelta)
}

/// Per-channel change relative to the previous window of the same partition;
/// zero for the first window.
pub fn window_difference_with(
    current: &Window,
    previous: Option<&Window>,
    mode: DifferenceMode,
) -> Result<[f64; 6], FeatureError> {
    let Some(previous) = previous else {
        return Ok([0.0; 6]);
    };
    if previous.len() != current.len() {
        return Err(FeatureError::LengthMismatch {
            current: current.len(),
            previous: previous.len(),
        });
    }
    let cur = window_mean(current);
    let prev = window_mean(previous);
    Ok(std::array::from_fn(|c| match mode {
        DifferenceMode::MeanDelta => cur[c] - prev[c],
        DifferenceMode::SumMinusMean => cur[c] * current.len() as f64 - prev[c],
    }))
}

/// Pearson correlation of the 15 channel pairs. A pair with a constant
/// channel scores 0.
pub fn pairwise_correlation(window: &Window) -> [f64; PAIR_COUNT] {
    let n = window.len() as f64;
    // Tested on the raw values: a constant channel's centred values can pick
    // up rounding noise from the mean and would otherwise correlate at ±1.
    let constant: [bool; 6] = std::array::from_fn(|c| {
        let v = &window.channels[c];
        v.iter().all(|x| *x == v[0])
    });
    let means = window_mean(window);
    let centered: Vec<Vec<f64>> = (0..6)
        .map(|c| window.channels[c].iter().map(|x| x - means[c]).collect())
        .collect();
    let ss: Vec<f64> = centered
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>() / n)
        .collect();
    let mut out = [0.0; PAIR_COUNT];
    for (slot, (i, j)) in out.iter_mut().zip(channel_pairs()) {
        if constant[i] || constant[j] || ss[i] <= 0.0 || ss[j] <= 0.0 {
            continue;
        }
        let cov = centered[i]
            .iter()
            .zip(&centered[j])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n;
        *slot = (cov / (ss[i].sqrt() * ss[j].sqrt())).clamp(-1.0, 1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::Partition;

    pub(crate) fn window_of(channels: [Vec<f64>; 6]) -> Window {
        let n = channels[0].len();
        Window {
            driver_id: "d".into(),
            start_t: 0.0,
            end_t: n as f64 * 0.5,
            channels,
            partition: Partition::Train,
        }
    }

    #[test]
    fn constant_channel_has_zero_variance() {
        let w = window_of(std::array::from_fn(|_| vec![4.5; 10]));
        assert_eq!(window_mean(&w), [4.5; 6]);
        assert_eq!(window_variance(&w), [0.0; 6]);
    }

    #[test]
    fn two_point_channel() {
        let w = window_of(std::array::from_fn(|_| vec![1.0, 3.0]));
        assert_eq!(window_mean(&w)[0], 2.0);
        assert_eq!(window_variance(&w)[0], 1.0);
    }

    #[test]
    fn first_window_difference_is_zero() {
        let w = window_of(std::array::from_fn(|c| vec![c as f64; 4]));
        assert_eq!(window_difference(&w, None).unwrap(), [0.0; 6]);
    }

    #[test]
    fn difference_of_shifted_means_is_one() {
        let cur = window_of(std::array::from_fn(|c| vec![(c + 1) as f64; 4]));
        let prev = window_of(std::array::from_fn(|c| vec![c as f64; 4]));
        assert_eq!(window_difference(&cur, Some(&prev)).unwrap(), [1.0; 6]);
        let literal = window_difference_with(&cur, Some(&prev), DifferenceMode::SumMinusMean).unwrap();
        assert_eq!(literal[0], 4.0);
    }

    #[test]
    fn mismatched_lengths_are_an_error() {
        let cur = window_of(std::array::from_fn(|_| vec![1.0; 4]));
        let prev = window_of(std::array::from_fn(|_| vec![1.0; 5]));
        assert!(window_difference(&cur, Some(&prev)).is_err());
    }

    #[test]
    fn identical_and_negated_channels() {
        let base = vec![1.0, 4.0, 2.0, 8.0, 5.0];
        let neg: Vec<f64> = base.iter().map(|x| -x).collect();
        let w = window_of([
            base.clone(),
            base.clone(),
            neg,
            vec![3.0; 5],
            base.clone(),
            base,
        ]);
        let r = pairwise_correlation(&w);
        let idx = |i, j| channel_pairs().position(|p| p == (i, j)).unwrap();
        assert!((r[idx(0, 1)] - 1.0).abs() < 1e-12);
        assert!((r[idx(0, 2)] + 1.0).abs() < 1e-12);
        assert_eq!(r[idx(0, 3)], 0.0);
        assert_eq!(r[idx(3, 5)], 0.0);
    }

    #[test]
    fn fifteen_pairs_in_order() {
        let pairs: Vec<_> = channel_pairs().collect();
        assert_eq!(pairs.len(), PAIR_COUNT);
        assert_eq!(pairs[0], (0, 1));
        assert_eq!(pairs[5], (1, 2));
        assert_eq!(pairs[14], (4, 5));
    }
}
