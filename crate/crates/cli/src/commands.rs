//! Subcommand implementations. Each command computes all of its outputs
//! before creating or touching the output directory, so a failure never
//! leaves partial files behind (the grid is the exception: it rewrites its
//! report after every cell on purpose).

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use driverid_core::eval::{
    evaluate as score, evaluation_csv, render_report, run_grid_with, sort_rows, GridBase, GridReport, GridRow,
    GridSpec,
};
use driverid_core::ingest::{parse_log, serialize_log, validate_trip, ValidationReport};
use driverid_core::models::{load_model_expecting, save_model, train_model, ModelSpec};
use driverid_core::pipeline::{derive_seed, featurize_trips, FeatureSplit, WindowCounts};
use driverid_core::preprocess::{clean as clean_trip, CleanTrip, RemovedSpan, StopInterval};
use driverid_core::synth::{generate_trip_with, make_profiles, TripSpec};
use driverid_core::features::write_feature_csv;
use driverid_core::FeatureSubset;
use serde::Serialize;

use crate::args::{Common, EvaluateArgs, GridArgs, SynthArgs};
use crate::config::RunConfig;
use crate::manifest::{write_manifest, Manifest};
use crate::{Classify, Failure};

/// Progress and summaries go to stdout; a closed pipe (`| head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! say_raw {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

type Outcome = Result<(), Failure>;

struct Setup {
    cfg: RunConfig,
    out: PathBuf,
}

fn setup(common: &Common) -> Result<Setup, Failure> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path).usage()?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Failure::Usage(anyhow!("no output directory (use --out or `output` in the config)")))?;
    Ok(Setup { cfg, out })
}

fn manifest_path(common: &Common) -> Result<&Path, Failure> {
    common
        .manifest
        .as_deref()
        .ok_or_else(|| Failure::Usage(anyhow!("--manifest is required")))
}

/// Creates `dir` and writes every `(file name, contents)` pair into it.
fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Outcome {
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create directory {}", parent.display()))
                .runtime()?;
        }
        fs::write(&path, bytes)
            .with_context(|| format!("cannot write {}", path.display()))
            .runtime()?;
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut text = serde_json::to_string_pretty(value).runtime()?;
    text.push('\n');
    Ok(text.into_bytes())
}

struct LoadedTrip {
    name: String,
    rejected_lines: Vec<u64>,
    validation: ValidationReport,
    clean: CleanTrip,
}

/// Ingests and cleans every trip listed in the manifest.
fn load_and_clean(path: &Path, cfg: &RunConfig) -> Result<Vec<LoadedTrip>, Failure> {
    let manifest = Manifest::load(path).runtime()?;
    manifest
        .entries
        .iter()
        .map(|entry| {
            let name = entry
                .path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| entry.path.display().to_string());
            let file = File::open(&entry.path)
                .with_context(|| format!("cannot open trip log {}", entry.path.display()))
                .runtime()?;
            let parsed = parse_log(BufReader::new(file), &entry.driver_id, entry.rate_hz)
                .with_context(|| format!("trip {name}"))
                .runtime()?;
            let clean = clean_trip(&parsed.trip, &cfg.cleaning)
                .with_context(|| format!("trip {name}"))
                .runtime()?;
            Ok(LoadedTrip {
                name,
                rejected_lines: parsed.rejected_lines,
                validation: validate_trip(&parsed.trip),
                clean,
            })
        })
        .collect()
}

fn featurize_loaded(trips: &[LoadedTrip], cfg: &RunConfig) -> Result<FeatureSplit, Failure> {
    let clean: Vec<CleanTrip> = trips.iter().map(|t| t.clean.clone()).collect();
    let names: Vec<String> = trips.iter().map(|t| t.name.clone()).collect();
    featurize_trips(&clean, Some(&names), &cfg.segmentation, &cfg.features).runtime()
}

#[derive(Serialize)]
struct Seeds {
    master: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    synth: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<u64>,
}

impl Seeds {
    fn master(master: u64) -> Self {
        Self { master, synth: None, train: None, grid: None }
    }
}

pub fn synth(args: &SynthArgs) -> Outcome {
    let ctx = setup(&args.common)?;
    if args.drivers < 2 {
        return Err(Failure::Usage(anyhow!("--drivers must be at least 2, got {}", args.drivers)));
    }
    if !(args.rate.is_finite() && args.rate > 0.0) {
        return Err(Failure::Usage(anyhow!("--rate must be positive")));
    }
    let duration_s = args.hours * 3600.0;
    let window_s = ctx.cfg.segmentation.window_minutes * 60.0;
    if !(duration_s.is_finite() && duration_s >= window_s) {
        return Err(Failure::Usage(anyhow!(
            "--hours gives {duration_s} s per driver, shorter than one {window_s} s window"
        )));
    }
    for (flag, v) in [
        ("--short-dropouts-per-hour", args.short_dropouts_per_hour),
        ("--long-dropouts-per-hour", args.long_dropouts_per_hour),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Failure::Usage(anyhow!("{flag} must be non-negative")));
        }
    }
    let seed = derive_seed(ctx.cfg.seed, "synth");
    let profiles = make_profiles(args.drivers, args.separation, seed).usage()?;

    let manifest_target = args.common.manifest.clone();
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for profile in &profiles {
        let spec = TripSpec {
            short_dropouts_per_hour: args.short_dropouts_per_hour,
            long_dropouts_per_hour: args.long_dropouts_per_hour,
            ..TripSpec::new(duration_s, args.rate)
        };
        let (trip, truth) = generate_trip_with(profile, &spec).usage()?;
        let csv_name = format!("{}.csv", profile.driver_id);
        let listed = match &manifest_target {
            None => csv_name.clone(),
            Some(_) => std::path::absolute(ctx.out.join(&csv_name))
                .runtime()?
                .display()
                .to_string(),
        };
        rows.push((listed, profile.driver_id.clone(), args.rate));
        files.push((csv_name, serialize_log(&trip)));
        files.push((format!("truth/{}.json", profile.driver_id), json_bytes(&truth)?));
    }
    let manifest_text = write_manifest(&rows).into_bytes();
    let seeds = Seeds { synth: Some(seed), ..Seeds::master(ctx.cfg.seed) };
    files.push(("seeds.json".into(), json_bytes(&seeds)?));
    if manifest_target.is_none() {
        files.push(("manifest.csv".into(), manifest_text.clone()));
    }
    write_all(&ctx.out, &files)?;
    if let Some(path) = manifest_target {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let name = path.file_name().ok_or_else(|| Failure::Usage(anyhow!("--manifest is not a file path")))?;
        write_all(dir, &[(name.to_string_lossy().into_owned(), manifest_text)])?;
    }
    say!(
        "wrote {} trips of {:.2} h to {}",
        profiles.len(),
        args.hours,
        ctx.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct CleanSummary {
    trip: String,
    driver_id: String,
    rejected_lines: Vec<u64>,
    validation: ValidationReport,
    input_seconds: f64,
    clean_seconds: f64,
    stop_seconds: f64,
    gap_seconds: f64,
    stops: Vec<StopInterval>,
    removed_gaps: Vec<RemovedSpan>,
    provenance: Vec<String>,
}

fn hms(seconds: f64) -> String {
    let s = seconds.round() as u64;
    format!("{}:{:02}:{:02}", s / 3600, s / 60 % 60, s % 60)
}

pub fn clean(args: &Common) -> Outcome {
    let ctx = setup(args)?;
    let trips = load_and_clean(manifest_path(args)?, &ctx.cfg)?;
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    say!("{:<20} {:>10} {:>10} {:>10} {:>10}", "trip", "input", "clean", "stops", "gaps");
    for t in &trips {
        let c = &t.clean;
        say!(
            "{:<20} {:>10} {:>10} {:>10} {:>10}",
            t.name,
            hms(c.input_duration),
            hms(c.clean_duration()),
            hms(c.removed_stop_seconds),
            hms(c.removed_gap_seconds)
        );
        let stem = Path::new(&t.name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| t.name.clone());
        files.push((format!("{stem}.clean.csv"), serialize_log(&c.as_trip())));
        summaries.push(CleanSummary {
            trip: t.name.clone(),
            driver_id: c.driver_id.clone(),
            rejected_lines: t.rejected_lines.clone(),
            validation: t.validation,
            input_seconds: c.input_duration,
            clean_seconds: c.clean_duration(),
            stop_seconds: c.removed_stop_seconds,
            gap_seconds: c.removed_gap_seconds,
            stops: c.stops.clone(),
            removed_gaps: c.removed_gaps.clone(),
            provenance: c.provenance.clone(),
        });
    }
    files.push((
        "clean_report.json".into(),
        json_bytes(&serde_json::json!({ "trips": summaries, "config": ctx.cfg.snapshot() }))?,
    ));
    write_all(&ctx.out, &files)
}

#[derive(Serialize)]
struct FeaturizeReport<'a> {
    dimensions: usize,
    train_vectors: usize,
    test_vectors: usize,
    window_counts: &'a [WindowCounts],
    config: serde_json::Value,
}

pub fn featurize(args: &Common) -> Outcome {
    let ctx = setup(args)?;
    let trips = load_and_clean(manifest_path(args)?, &ctx.cfg)?;
    let split = featurize_loaded(&trips, &ctx.cfg)?;
    let mut csv = Vec::new();
    let vectors: Vec<_> = split.train.iter().chain(&split.test).cloned().collect();
    write_feature_csv(&split.schema, &vectors, &mut csv).runtime()?;
    let report = FeaturizeReport {
        dimensions: split.schema.len(),
        train_vectors: split.train.len(),
        test_vectors: split.test.len(),
        window_counts: &split.counts,
        config: ctx.cfg.snapshot(),
    };
    write_all(
        &ctx.out,
        &[("features.csv".into(), csv), ("featurize_report.json".into(), json_bytes(&report)?)],
    )?;
    say!(
        "{} train and {} test vectors of {} dimensions",
        report.train_vectors, report.test_vectors, report.dimensions
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainReport<'a> {
    model: &'a str,
    classes: &'a [String],
    dimensions: usize,
    train_windows: usize,
    window_counts: &'a [WindowCounts],
    seeds: Seeds,
    config: serde_json::Value,
}

pub fn train(args: &Common) -> Outcome {
    let ctx = setup(args)?;
    let trips = load_and_clean(manifest_path(args)?, &ctx.cfg)?;
    let split = featurize_loaded(&trips, &ctx.cfg)?;
    // Only the training partition is handed to the learner.
    let data = split.train_dataset().runtime()?;
    let seed = derive_seed(ctx.cfg.seed, "train");
    let model = train_model(&data, &ctx.cfg.model, seed).runtime()?;
    let mut model_bytes = Vec::new();
    save_model(&model, &mut model_bytes).runtime()?;
    let report = TrainReport {
        model: model.kind().name(),
        classes: &model.class_list,
        dimensions: split.schema.len(),
        train_windows: data.len(),
        window_counts: &split.counts,
        seeds: Seeds { train: Some(seed), ..Seeds::master(ctx.cfg.seed) },
        config: ctx.cfg.snapshot(),
    };
    write_all(
        &ctx.out,
        &[("model.json".into(), model_bytes), ("train_report.json".into(), json_bytes(&report)?)],
    )?;
    say!(
        "trained {} on {} windows from {} classes",
        report.model,
        report.train_windows,
        report.classes.len()
    );
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Outcome {
    let ctx = setup(&args.common)?;
    let model_file = File::open(&args.model)
        .with_context(|| format!("cannot open model {}", args.model.display()))
        .runtime()?;
    let schema = ctx.cfg.features.schema();
    let model = load_model_expecting(BufReader::new(model_file), &schema)
        .with_context(|| format!("model {}", args.model.display()))
        .map_err(|e| {
            if matches!(
                e.downcast_ref(),
                Some(driverid_core::models::ModelError::SchemaMismatch(_))
            ) {
                Failure::Usage(e)
            } else {
                Failure::Runtime(e)
            }
        })?;
    let trips = load_and_clean(manifest_path(&args.common)?, &ctx.cfg)?;
    let split = featurize_loaded(&trips, &ctx.cfg)?;
    let test = split.test_dataset().runtime()?;
    let mut report = score(&model, &test).runtime()?;
    report.config_snapshot = serde_json::json!({
        "config": ctx.cfg.snapshot(),
        "model": model.spec,
        "model_seed": model.seed,
        "seeds": Seeds::master(ctx.cfg.seed),
        "window_counts": split.counts,
    });
    let csv = evaluation_csv(&report).runtime()?;
    write_all(
        &ctx.out,
        &[
            ("evaluation.json".into(), json_bytes(&report)?),
            ("evaluation.csv".into(), csv.into_bytes()),
        ],
    )?;
    say!(
        "accuracy {:.4} on {} test windows",
        report.accuracy, report.n_test_windows
    );
    Ok(())
}

fn grid_spec(args: &GridArgs, cfg: &RunConfig) -> Result<GridSpec, Failure> {
    let mut grid = cfg.grid.clone().unwrap_or_default();
    if !args.features.is_empty() {
        grid.feature_subsets = args
            .features
            .iter()
            .map(|f| f.parse::<FeatureSubset>().map_err(|e| anyhow!(e)))
            .collect::<anyhow::Result<_>>()
            .usage()?;
    }
    if !args.models.is_empty() {
        grid.models = args
            .models
            .iter()
            .map(|&kind| {
                if cfg.model.kind() == kind {
                    cfg.model.clone()
                } else {
                    ModelSpec::default_for(kind)
                }
            })
            .collect();
    }
    if !args.windows.is_empty() {
        grid.window_minutes = args.windows.clone();
    }
    if !args.overlaps.is_empty() {
        grid.overlaps = args.overlaps.clone();
    }
    if let Some(r) = args.repetitions {
        grid.repetitions = r;
    }
    grid.validate().usage()?;
    for spec in &grid.models {
        spec.validate().usage()?;
    }
    for &w in &grid.window_minutes {
        for &o in &grid.overlaps {
            let seg = driverid_core::SegmentationConfig {
                window_minutes: w,
                overlap_fraction: o,
                ..cfg.segmentation.clone()
            };
            seg.validate()
                .with_context(|| format!("grid cell window {w} min, overlap {o}"))
                .usage()?;
        }
    }
    Ok(grid)
}

fn grid_files(report: &GridReport) -> Result<Vec<(String, Vec<u8>)>, Failure> {
    let rendered = render_report(report).runtime()?;
    Ok(vec![
        ("grid.csv".into(), rendered.csv.into_bytes()),
        ("grid.json".into(), {
            let mut j = rendered.json;
            j.push('\n');
            j.into_bytes()
        }),
        ("grid.txt".into(), rendered.text.into_bytes()),
    ])
}

pub fn grid(args: &GridArgs) -> Outcome {
    let ctx = setup(&args.common)?;
    let spec = grid_spec(args, &ctx.cfg)?;
    if args.max_cells == Some(0) {
        return Err(Failure::Usage(anyhow!("--max-cells must be at least 1")));
    }
    let trips = load_and_clean(manifest_path(&args.common)?, &ctx.cfg)?;
    let clean: Vec<CleanTrip> = trips.into_iter().map(|t| t.clean).collect();
    let base = GridBase {
        segmentation: ctx.cfg.segmentation.clone(),
        features: ctx.cfg.features.clone(),
    };
    let seed = derive_seed(ctx.cfg.seed, "grid");
    let mut done: Vec<GridRow> = Vec::new();
    let mut write_error = None;
    let report = run_grid_with(&clean, &spec, &base, seed, |row, finished, total| {
        done.push(row.clone());
        let mut rows = done.clone();
        sort_rows(&mut rows);
        let partial = GridReport { complete: finished == total, cells_total: total, rows };
        eprintln!("grid: cell {finished}/{total} done");
        if let Err(e) = grid_files(&partial).and_then(|f| write_all(&ctx.out, &f)) {
            write_error = Some(e);
            return false;
        }
        args.max_cells.is_none_or(|m| finished < m)
    })
    .runtime()?;
    if let Some(e) = write_error {
        return Err(e);
    }
    write_all(&ctx.out, &grid_files(&report)?)?;
    say_raw!("{}", render_report(&report).runtime()?.text);
    let seeds = Seeds { grid: Some(seed), ..Seeds::master(ctx.cfg.seed) };
    write_all(
        &ctx.out,
        &[(
            "grid_config.json".into(),
            json_bytes(&serde_json::json!({ "seeds": seeds, "config": ctx.cfg.snapshot(), "grid": spec }))?,
        )],
    )
}
