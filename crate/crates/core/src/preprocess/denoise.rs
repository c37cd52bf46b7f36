use super::PreprocessError;
use crate::ingest::Trip;

/// Centered moving average over `window` samples, per channel.
///
/// Near the ends the window is clipped to the available samples. Missing
/// values are excluded from every average and stay missing.
pub fn denoise(trip: &Trip, window: usize) -> Result<Trip, PreprocessError> {
    if window == 0 || window % 2 == 0 {
        return Err(PreprocessError::Config(format!(
            "denoise window must be odd and positive, got {window}"
        )));
    }
    let n = trip.samples.len();
    if window > n {
        return Err(PreprocessError::Config(format!(
            "denoise window {window} exceeds sample count {n}"
        )));
    }
    if window == 1 {
        return Ok(trip.clone());
    }
    let half = window / 2;
    let mut out = trip.clone();
    for c in 0..6 {
        for i in 0..n {
            if trip.samples[i].is_missing(c) {
                continue;
            }
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let (sum, count) = trip.samples[lo..=hi]
                .iter()
                .map(|s| s.channels[c])
                .filter(|v| !v.is_nan())
                .fold((0.0, 0usize), |(s, k), v| (s + v, k + 1));
            out.samples[i].channels[c] = sum / count as f64;
        }
    }
    Ok(out)
}
