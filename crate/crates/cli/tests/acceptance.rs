//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use driverid_core::features::{pairwise_correlation, trimmed_histogram, window_mean, window_variance};
use driverid_core::models::{Activation, Knn, Mlp};
use driverid_core::pipeline::segment_trip;
use driverid_core::preprocess::{clean, CleanTrip, CleaningConfig};
use driverid_core::segment::SegmentationConfig;
use driverid_core::synth::{generate_trip_with, make_profiles, Separation, TripSpec};
use driverid_core::FeatureConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn driverid(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_driverid"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("`driverid {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn read_json(path: &Path) -> Result<Value, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| e.to_string())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn feature_dimensions() -> Outcome {
    let n = FeatureConfig::default().schema().len();
    ensure(n == 633, || format!("{n} dimensions"))?;
    Ok(format!("{n} dimensions"))
}

fn oracle_equivalence() -> Outcome {
    const N: u64 = 150;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..N {
        let n = rng.random_range(2..400);
        let bins = rng.random_range(1..120);
        let keep = if rng.random_bool(0.5) { 0.95 } else { rng.random_range(0.05..=1.0) };
        let x = support::signal(&mut rng, n);
        ensure(trimmed_histogram(&x, bins, keep).ok() == support::histogram(&x, bins, keep), || {
            format!("histogram instance {i}")
        })?;
    }
    for i in 0..N {
        let n = rng.random_range(2..600);
        let w = support::window(&mut rng, n);
        let (means, vars) = (window_mean(&w), window_variance(&w));
        for c in 0..6 {
            let (m, v) = support::mean_variance(&w.channels[c]);
            let scale = w.channels[c].iter().fold(0.0f64, |a, x| a.max(x.abs()));
            ensure(support::close(means[c], m, 1e-12, scale), || format!("mean instance {i}"))?;
            ensure(support::close(vars[c], v, 1e-12, scale * scale), || format!("variance instance {i}"))?;
        }
        let want = support::correlations(&w.channels);
        for (a, b) in pairwise_correlation(&w).iter().zip(&want) {
            ensure(support::close(*a, *b, 1e-12, 1.0), || format!("correlation instance {i}"))?;
        }
    }
    for i in 0..N {
        let n = rng.random_range(3..80);
        let dims = rng.random_range(1..6);
        let n_classes = rng.random_range(2..5).min(n);
        let grid = rng.random_bool(0.5);
        let (rows, targets) = support::labeled_points(&mut rng, n, dims, n_classes, grid);
        let k = rng.random_range(1..=n.min(9));
        let knn = Knn::fit(&rows, &targets, n_classes, k).map_err(|e| e.to_string())?;
        let (q, _) = support::labeled_points(&mut rng, 1, dims, 1, grid);
        ensure(knn.predict(&q[0]) == support::knn_predict(&rows, &targets, n_classes, k, &q[0]), || {
            format!("knn instance {i}")
        })?;
    }
    Ok(format!("{N} instances each for histogram, mean/variance, correlation, knn"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    let points = 12;
    for p in 0..points {
        let mut net = Mlp::new(2, &[3], 2, Activation::Tanh, rng.random());
        let params: Vec<f64> = (0..net.param_count()).map(|_| rng.random_range(-1.5..1.5)).collect();
        net.set_flat_params(&params);
        let rows: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let targets: Vec<usize> = (0..8).map(|i| i % 2).collect();
        let idx: Vec<usize> = (0..rows.len()).collect();
        let l2 = if p % 2 == 0 { 0.0 } else { 0.01 };
        let (_, analytic) = net.loss_and_gradient(&rows, &targets, &idx, l2);
        let eps = 1e-6;
        let mut probe = net.clone();
        let (mut diff, mut a_norm, mut n_norm) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..params.len() {
            let mut q = params.clone();
            q[i] += eps;
            probe.set_flat_params(&q);
            let up = probe.loss_and_gradient(&rows, &targets, &idx, l2).0;
            q[i] -= 2.0 * eps;
            probe.set_flat_params(&q);
            let down = probe.loss_and_gradient(&rows, &targets, &idx, l2).0;
            let numeric = (up - down) / (2.0 * eps);
            diff += (analytic[i] - numeric).powi(2);
            a_norm += analytic[i].powi(2);
            n_norm += numeric.powi(2);
        }
        worst = worst.max(diff.sqrt() / (a_norm.sqrt() + n_norm.sqrt()).max(1e-12));
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    Ok(format!("{points} points, max relative error {worst:.1e}"))
}

fn stop_removal() -> Outcome {
    let trips = 24u64;
    let mut worst_total = 0.0f64;
    let mut checked_stops = 0;
    for seed in 0..trips {
        let sep = if seed % 2 == 0 { Separation::Easy } else { Separation::Hard };
        let mut profile = make_profiles(10, sep, seed).map_err(|e| e.to_string())?[(seed % 10) as usize].clone();
        profile.stop_frequency = 8.0;
        let spec = TripSpec { long_dropouts_per_hour: 4.0, ..TripSpec::new(1800.0, 2.0) };
        let (trip, truth) = generate_trip_with(&profile, &spec).map_err(|e| e.to_string())?;
        let cfg = CleaningConfig::default();
        let c = clean(&trip, &cfg).map_err(|e| e.to_string())?;
        let period = 1.0 / spec.rate_hz;
        for stop in truth.stops.iter().filter(|s| s.duration() > cfg.min_stop_seconds) {
            let found = c
                .stops
                .iter()
                .find(|d| d.start_t < stop.end_t && stop.start_t < d.end_t)
                .ok_or_else(|| format!("trip {seed}: stop {stop:?} not detected"))?;
            ensure(
                (found.start_t - stop.start_t).abs() <= period + 1e-9
                    && (found.end_t - stop.end_t).abs() <= period + 1e-9,
                || format!("trip {seed}: boundaries {found:?} vs {stop:?}"),
            )?;
            checked_stops += 1;
        }
        let total = (c.removed_stop_seconds - truth.stop_seconds()).abs();
        worst_total = worst_total.max(total);
        ensure(total <= 1.0, || format!("trip {seed}: removed {} s vs {} s", c.removed_stop_seconds, truth.stop_seconds()))?;
        let identity = c.input_duration - (c.clean_duration() + c.removed_stop_seconds + c.removed_gap_seconds);
        ensure(identity.abs() <= period, || format!("trip {seed}: identity off by {identity}"))?;
    }
    Ok(format!("{trips} trips, {checked_stops} stops, worst total error {worst_total:.2} s"))
}

fn partition_purity() -> Outcome {
    let trips: Vec<CleanTrip> = make_profiles(3, Separation::Hard, 5)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|p| {
            let spec = TripSpec { long_dropouts_per_hour: 4.0, ..TripSpec::new(3600.0, 2.0) };
            clean(&generate_trip_with(p, &spec).unwrap().0, &CleaningConfig::default()).unwrap()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut configs, mut pairs) = (0, 0usize);
    while configs < 60 {
        let cfg = SegmentationConfig {
            window_minutes: rng.random_range(0.5..12.0),
            overlap_fraction: rng.random_range(0.0..0.95),
            train_fraction: rng.random_range(0.3..0.9),
        };
        let mut any = false;
        for trip in &trips {
            let Ok((train, test)) = segment_trip(trip, &cfg) else { continue };
            any = true;
            for a in &train {
                for b in &test {
                    ensure(!a.overlaps(b), || format!("{cfg:?}: {}..{} meets {}..{}", a.start_t, a.end_t, b.start_t, b.end_t))?;
                    pairs += 1;
                }
            }
        }
        if any {
            configs += 1;
        }
    }
    Ok(format!("{configs} configs, {pairs} train/test pairs disjoint"))
}

struct Corpus {
    _dir: TempDir,
    root: std::path::PathBuf,
    manifest: std::path::PathBuf,
}

fn easy_corpus() -> Result<Corpus, String> {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let root = dir.path().to_path_buf();
    let data = root.join("data");
    driverid(&["synth", "--drivers", "10", "--hours", "2", "--rate", "2", "--separation", "easy", "--seed", "7", "--out", s(&data)])?;
    Ok(Corpus { manifest: data.join("manifest.csv"), root, _dir: dir })
}

/// The library's MLP defaults stop too early on ~100 training windows; these
/// settings were chosen on corpora generated from other seeds.
const MLP_MODEL: &str = "[model]\nkind = \"mlp\"\nbatch_size = 8\nmax_epochs = 1000\nearly_stop_patience = 50\n";

fn config_for(corpus: &Corpus, kind: &str) -> Result<std::path::PathBuf, String> {
    let path = corpus.root.join(format!("{kind}.toml"));
    let model = if kind == "mlp" { MLP_MODEL.to_string() } else { format!("[model]\nkind = \"{kind}\"\n") };
    fs::write(&path, format!("seed = 7\n{model}")).map_err(|e| e.to_string())?;
    Ok(path)
}

fn train_and_score(corpus: &Corpus, kind: &str) -> Result<(f64, Value), String> {
    let config = config_for(corpus, kind)?;
    let out = corpus.root.join(format!("run-{kind}"));
    let common = ["--manifest", s(&corpus.manifest), "--config", s(&config), "--out", s(&out)];
    driverid(&[&["train"], &common[..]].concat())?;
    let model = out.join("model.json");
    driverid(&[&["evaluate", "--model", s(&model)], &common[..]].concat())?;
    let eval = read_json(&out.join("evaluation.json"))?;
    let report = read_json(&out.join("train_report.json"))?;
    Ok((eval["accuracy"].as_f64().ok_or("no accuracy")?, report))
}

fn end_to_end(corpus: &Corpus) -> Outcome {
    let mut parts = Vec::new();
    for kind in ["mlp", "knn", "dtree", "rforest"] {
        let (acc, report) = train_and_score(corpus, kind)?;
        let classes = report["classes"].as_array().map_or(0, Vec::len);
        ensure(classes == 10, || format!("{kind}: train report lists {classes} classes"))?;
        let floor = if kind == "mlp" { 0.90 } else { 0.60 };
        ensure(acc >= floor, || format!("{kind} accuracy {acc:.3} < {floor}"))?;
        parts.push(format!("{kind} {acc:.3}"));
    }
    let grid_dir = corpus.root.join("grid");
    let config = config_for(corpus, "mlp")?;
    driverid(&["grid", "--manifest", s(&corpus.manifest), "--config", s(&config), "--out", s(&grid_dir), "--repetitions", "1"])?;
    let grid = read_json(&grid_dir.join("grid.json"))?;
    let rows = grid["rows"].as_array().ok_or("no rows")?;
    ensure(grid["complete"] == true && rows.len() == 16, || format!("grid has {} rows", rows.len()))?;
    let annotated = rows.iter().all(|r| r["mean_accuracy"].is_number() || r["error"].is_string());
    ensure(annotated, || "a grid cell has neither accuracy nor error".into())?;
    let failed = rows.iter().filter(|r| r["error"].is_string()).count();
    let text = fs::read_to_string(grid_dir.join("grid.txt")).map_err(|e| e.to_string())?;
    ensure(text.lines().count() >= 18, || "grid.txt is short".into())?;
    Ok(format!("{}; grid 16 cells ({failed} failure-annotated)", parts.join(", ")))
}

fn determinism(corpus: &Corpus) -> Outcome {
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = corpus.root.join(format!("det-{run}"));
        let common = ["--manifest", s(&corpus.manifest), "--out", s(&out), "--seed", "13"];
        driverid(&[&["train"], &common[..]].concat())?;
        driverid(&[&["evaluate", "--model", s(&out.join("model.json"))], &common[..]].concat())?;
        outputs.push(out);
    }
    let files = ["model.json", "train_report.json", "evaluation.json", "evaluation.csv"];
    for f in files {
        let a = fs::read(outputs[0].join(f)).map_err(|e| e.to_string())?;
        let b = fs::read(outputs[1].join(f)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} files byte-identical", files.len()))
}

fn ablation(corpus: &Corpus) -> Outcome {
    let out = corpus.root.join("ablation");
    let config = config_for(corpus, "mlp")?;
    let mut args = vec!["grid", "--manifest", s(&corpus.manifest), "--config", s(&config), "--out", s(&out)];
    args.extend(["--windows", "15", "--overlaps", "0.75", "--repetitions", "1"]);
    for f in ["all", "hist", "mean", "var", "diff", "corr"] {
        args.extend(["--features", f]);
    }
    for m in ["mlp", "knn", "dtree", "rforest"] {
        args.extend(["--models", m]);
    }
    driverid(&args)?;
    let grid = read_json(&out.join("grid.json"))?;
    let rows = grid["rows"].as_array().ok_or("no rows")?;
    let all_label = driverid_core::FeatureSubset::all().label();
    let acc = |model: &str, features: &str| -> Option<f64> {
        rows.iter()
            .find(|r| r["model"] == model && r["features"] == features)
            .and_then(|r| r["mean_accuracy"].as_f64())
    };
    let mut info = Vec::new();
    for model in ["knn", "dtree", "rforest"] {
        let all = acc(model, &all_label).unwrap_or(f64::NAN);
        let best = ["Histogram", "Mean", "Variance", "Difference", "Correlation"]
            .iter()
            .filter_map(|f| acc(model, f))
            .fold(f64::NAN, f64::max);
        info.push(format!("{model} all {all:.3} vs best single {best:.3}"));
    }
    println!("      informational: {}", info.join("; "));
    let all = acc("mlp", &all_label).ok_or("mlp all-features cell missing")?;
    let mut worst_gap = f64::NEG_INFINITY;
    for f in ["Histogram", "Mean", "Variance", "Difference", "Correlation"] {
        let single = acc("mlp", f).ok_or_else(|| format!("mlp {f} cell missing"))?;
        worst_gap = worst_gap.max(single - all);
        ensure(all >= single - 0.05, || format!("mlp all {all:.3} < {f} {single:.3} - 0.05"))?;
    }
    Ok(format!("mlp all {all:.3}, largest single-family lead {worst_gap:+.3}"))
}

struct Criterion<'a> {
    name: &'static str,
    budget: Duration,
    run: Box<dyn FnOnce() -> Outcome + 'a>,
}

fn main() {
    let started = Instant::now();
    let corpus = easy_corpus();
    let corpus_time = started.elapsed();
    let shared = |f: fn(&Corpus) -> Outcome| {
        let c = corpus.as_ref();
        move || match c {
            Ok(c) => f(c),
            Err(e) => Err(format!("corpus generation failed: {e}")),
        }
    };
    let criteria: Vec<Criterion> = vec![
        Criterion { name: "feature dimensions", budget: Duration::from_secs(1), run: Box::new(feature_dimensions) },
        Criterion { name: "oracle equivalence", budget: Duration::from_secs(10), run: Box::new(oracle_equivalence) },
        Criterion { name: "mlp gradient check", budget: Duration::from_secs(5), run: Box::new(gradient_check) },
        Criterion { name: "stop removal", budget: Duration::from_secs(30), run: Box::new(stop_removal) },
        Criterion { name: "partition purity", budget: Duration::from_secs(10), run: Box::new(partition_purity) },
        Criterion { name: "end-to-end synthetic", budget: Duration::from_secs(300) - corpus_time, run: Box::new(shared(end_to_end)) },
        Criterion { name: "determinism", budget: Duration::from_secs(60), run: Box::new(shared(determinism)) },
        Criterion { name: "ablation ordering", budget: Duration::from_secs(300), run: Box::new(shared(ablation)) },
    ];
    let mut failures = 0;
    for c in criteria {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = t.elapsed();
        let result = match result {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; took {elapsed:.1?}, budget {:.0?}", c.budget)),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS  {:<22} {detail} [{:.1}s]", c.name, elapsed.as_secs_f64()),
            Err(why) => {
                failures += 1;
                println!("FAIL  {:<22} {why} [{:.1}s]", c.name, elapsed.as_secs_f64());
            }
        }
    }
    println!("acceptance: {failures} of 8 criteria failed");
    if failures > 0 {
        std::process::exit(1);
    }
}
