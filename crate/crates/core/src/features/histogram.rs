use super::FeatureError;

/// Empirical quantile with linear interpolation between order statistics
/// (`h = (n − 1) p`). `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Central range `[q_lo, q_hi]` that keeps the fraction `keep` of the data.
pub fn trim_range(signal: &[f64], keep: f64) -> (f64, f64) {
    let mut sorted = signal.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - keep) / 2.0;
    (quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail))
}

/// Lower edge of bin `k` over `[lo, hi]`.
#[inline]
pub fn bin_edge(lo: f64, hi: f64, k: usize, bins: usize) -> f64 {
    lo + (hi - lo) * (k as f64 / bins as f64)
}

/// Normalized histogram of the samples inside the central `keep` range.
///
/// Bin `k` holds `edge(k) ≤ x < edge(k + 1)`; the last bin is closed on the
/// right. A constant signal puts all mass in bin 0. Very short signals or
/// tiny `keep` can leave the range without samples, which is an error.
pub fn trimmed_histogram(signal: &[f64], bins: usize, keep: f64) -> Result<Vec<f64>, FeatureError> {
    if signal.len() < 2 {
        return Err(FeatureError::ShortSignal(signal.len()));
    }
    if bins == 0 {
        return Err(FeatureError::Config("histogram_bins must be at least 1".into()));
    }
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(FeatureError::Config(format!(
            "trim_keep_fraction must be in (0, 1], got {keep}"
        )));
    }
    let (lo, hi) = trim_range(signal, keep);
    let mut counts = vec![0usize; bins];
    if lo == hi {
        counts[0] = signal.iter().filter(|&&x| x == lo).count();
    } else {
        let scale = bins as f64 / (hi - lo);
        for &x in signal.iter().filter(|&&x| x >= lo && x <= hi) {
            let mut k = (((x - lo) * scale) as usize).min(bins - 1);
            // Settle on the bin whose edges actually bracket x.
            while k > 0 && x < bin_edge(lo, hi, k, bins) {
                k -= 1;
            }
            while k + 1 < bins && x >= bin_edge(lo, hi, k + 1, bins) {
                k += 1;
            }
            counts[k] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(FeatureError::EmptyTrimRange { n: signal.len(), keep });
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}
