//! Simplified reorientation: a single rotation that aligns the trip-mean
//! accelerometer vector with the canonical gravity axis `+z`.

use super::PreprocessError;
use crate::ingest::Trip;

pub const GRAVITY: f64 = 9.81;

/// Minimum contiguous span of complete accelerometer data needed to
/// estimate gravity.
const MIN_ORIENTATION_SECONDS: f64 = 10.0;

pub type Rotation = [[f64; 3]; 3];

const IDENTITY: Rotation = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn apply(r: &Rotation, v: [f64; 3]) -> [f64; 3] {
    [
        r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
        r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
        r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
    ]
}

/// Rotation taking the direction of `mean_accel` onto `+z`.
///
/// Returns `None` when the vector is already aligned (identity). The
/// anti-parallel case is a 180° turn about the x axis.
pub fn rotation_to_gravity(mean_accel: [f64; 3]) -> Result<Option<Rotation>, PreprocessError> {
    let m = norm(mean_accel);
    if !(m >= 1.0) {
        return Err(PreprocessError::CannotEstimateGravity(m));
    }
    let u = [mean_accel[0] / m, mean_accel[1] / m, mean_accel[2] / m];
    // axis = u × z, cos = u · z
    let axis = [u[1], -u[0], 0.0];
    let sin = norm(axis);
    let cos = u[2];
    if sin < 1e-15 {
        return Ok(if cos > 0.0 {
            None
        } else {
            Some([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
        });
    }
    let k = [axis[0] / sin, axis[1] / sin, axis[2] / sin];
    let angle = sin.atan2(cos);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    let mut r = IDENTITY;
    let skew = [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]];
    for i in 0..3 {
        for j in 0..3 {
            let kk = k[i] * k[j] - if i == j { 1.0 } else { 0.0 };
            r[i][j] += s * skew[i][j] + t * kk;
        }
    }
    Ok(Some(r))
}

fn longest_complete_accel_run(trip: &Trip) -> usize {
    let mut best = 0;
    let mut run = 0;
    for (i, s) in trip.samples.iter().enumerate() {
        let contiguous = i == 0 || s.t - trip.samples[i - 1].t <= 1.5 * trip.period();
        if s.accel_complete() {
            run = if contiguous { run + 1 } else { 1 };
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Rotates accelerometer and gyroscope triads so that mean gravity lies on `+z`.
///
/// A triad with any missing component comes out fully missing.
pub fn reorient(trip: &Trip) -> Result<Trip, PreprocessError> {
    let run = longest_complete_accel_run(trip);
    let run_s = run as f64 * trip.period();
    if run_s + 1e-9 < MIN_ORIENTATION_SECONDS {
        return Err(PreprocessError::InsufficientOrientationData {
            needed_s: MIN_ORIENTATION_SECONDS,
            found_s: run_s,
        });
    }
    let mut sum = [0.0; 3];
    let mut count = 0usize;
    for s in trip.samples.iter().filter(|s| s.accel_complete()) {
        for (acc, v) in sum.iter_mut().zip(s.accel()) {
            *acc += v;
        }
        count += 1;
    }
    let mean = sum.map(|v| v / count as f64);
    let Some(rot) = rotation_to_gravity(mean)? else {
        return Ok(trip.clone());
    };
    let mut out = trip.clone();
    for s in out.samples.iter_mut() {
        for base in [0usize, 3] {
            let v = [s.channels[base], s.channels[base + 1], s.channels[base + 2]];
            let r = if v.iter().any(|x| x.is_nan()) {
                [f64::NAN; 3]
            } else {
                apply(&rot, v)
            };
            s.channels[base..base + 3].copy_from_slice(&r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SensorSample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_trip(accel: [f64; 3], gyro: [f64; 3], n: usize) -> Trip {
        let samples = (0..n)
            .map(|i| SensorSample::new(i as f64 * 0.5, accel, gyro))
            .collect();
        Trip::new("d", samples, 2.0).unwrap()
    }

    fn mean_accel(trip: &Trip) -> [f64; 3] {
        let n = trip.len() as f64;
        let mut m = [0.0; 3];
        for s in &trip.samples {
            for k in 0..3 {
                m[k] += s.channels[k] / n;
            }
        }
        m
    }

    #[test]
    fn aligned_trip_is_unchanged() {
        let trip = constant_trip([0.0, 0.0, GRAVITY], [0.1, 0.2, 0.3], 40);
        assert!(reorient(&trip).unwrap().same_as(&trip));
    }

    #[test]
    fn x_axis_gravity_is_moved_to_z() {
        let trip = constant_trip([GRAVITY, 0.0, 0.0], [0.0; 3], 40);
        let m = mean_accel(&reorient(&trip).unwrap());
        assert!(m[0].abs() < 1e-9 && m[1].abs() < 1e-9);
        assert!((m[2] - GRAVITY).abs() < 1e-9);
    }

    #[test]
    fn anti_parallel_uses_half_turn_about_x() {
        let trip = constant_trip([0.0, 0.0, -GRAVITY], [0.0, 1.0, 2.0], 40);
        let out = reorient(&trip).unwrap();
        assert_eq!(out.samples[0].accel(), [0.0, 0.0, GRAVITY]);
        assert_eq!(out.samples[0].gyro(), [0.0, -1.0, -2.0]);
    }

    #[test]
    fn weak_gravity_is_rejected() {
        let trip = constant_trip([0.3, 0.2, 0.1], [0.0; 3], 40);
        assert!(matches!(
            reorient(&trip),
            Err(PreprocessError::CannotEstimateGravity(_))
        ));
    }

    #[test]
    fn short_trip_is_rejected() {
        let trip = constant_trip([0.0, 0.0, GRAVITY], [0.0; 3], 19);
        assert!(matches!(
            reorient(&trip),
            Err(PreprocessError::InsufficientOrientationData { .. })
        ));
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        // Any rotation that maps a random direction to z is rigid; compose with
        // its transpose to get a rotation away from z.
        let r = rotation_to_gravity(v.map(|x| x * 10.0)).unwrap().unwrap();
        [
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ]
    }

    #[test]
    fn random_rigid_rotation_preserves_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let rot = random_rotation(&mut rng);
            let samples: Vec<_> = (0..60)
                .map(|i| {
                    let a = [
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                        GRAVITY + rng.random_range(-1.0..1.0),
                    ];
                    let g = [
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                    ];
                    SensorSample::new(i as f64 * 0.5, apply(&rot, a), apply(&rot, g))
                })
                .collect();
            let trip = Trip::new("d", samples, 2.0).unwrap();
            let out = reorient(&trip).unwrap();
            for (a, b) in trip.samples.iter().zip(&out.samples) {
                for (x, y) in [(a.accel(), b.accel()), (a.gyro(), b.gyro())] {
                    let (nx, ny) = (norm(x), norm(y));
                    assert!((nx - ny).abs() <= 1e-9 * nx.max(1e-12));
                }
            }
            let m = mean_accel(&out);
            assert!(m[0].abs() < 1e-9 && m[1].abs() < 1e-9 && m[2] > 0.0);
        }
    }

    #[test]
    fn missing_component_blanks_the_triad() {
        let mut trip = constant_trip([1.0, 0.0, 9.0], [0.0; 3], 40);
        trip.samples[5].channels[0] = f64::NAN;
        let out = reorient(&trip).unwrap();
        assert!((0..3).all(|c| out.samples[5].is_missing(c)));
        assert!((3..6).all(|c| !out.samples[5].is_missing(c)));
    }
}
