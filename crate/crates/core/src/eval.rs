//! Held-out scoring, the window × overlap × features × model grid, and report
//! rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureConfig, FeatureSubset};
use crate::models::{train_model, LabeledDataset, ModelError, ModelSpec, TrainedModel};
use crate::pipeline::{derive_seed, featurize_trips, PipelineError};
use crate::preprocess::CleanTrip;
use crate::segment::SegmentationConfig;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty test set")]
    EmptyTestSet,
    #[error("schema mismatch: model has {model} features, test data has {data}")]
    SchemaMismatch { model: usize, data: usize },
    #[error("grid config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("report output: {0}")]
    Output(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub class_list: Vec<String>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    /// `None` for a class with no test windows.
    pub per_class_recall: Vec<Option<f64>>,
    pub n_test_windows: usize,
    pub config_snapshot: serde_json::Value,
}

/// Scores `model` on `test`, counting exactly.
pub fn evaluate(model: &TrainedModel, test: &LabeledDataset) -> Result<EvaluationReport, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    if test.schema != model.schema {
        return Err(EvalError::SchemaMismatch {
            model: model.schema.len(),
            data: test.schema.len(),
        });
    }
    let k = model.class_list.len();
    let truth = test.targets_for(&model.class_list)?;
    let mut confusion = vec![vec![0usize; k]; k];
    for (row, &t) in test.rows.iter().zip(&truth) {
        confusion[t][model.predict_index(row)?] += 1;
    }
    Ok(report_from_confusion(
        model.class_list.clone(),
        confusion,
        serde_json::json!({ "model": model.spec, "seed": model.seed }),
    ))
}

/// Derives accuracy and recall from a confusion matrix.
pub fn report_from_confusion(
    class_list: Vec<String>,
    confusion: Vec<Vec<usize>>,
    config_snapshot: serde_json::Value,
) -> EvaluationReport {
    let n: usize = confusion.iter().flatten().sum();
    let correct: usize = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    let per_class_recall = confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: usize = row.iter().sum();
            (total > 0).then(|| row[i] as f64 / total as f64)
        })
        .collect();
    EvaluationReport {
        accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        class_list,
        confusion,
        per_class_recall,
        n_test_windows: n,
        config_snapshot,
    }
}

/// Confusion matrix as CSV: one row per true class, one count column per
/// predicted class, then that class's recall.
pub fn evaluation_csv(report: &EvaluationReport) -> Result<String, EvalError> {
    let out = |e: csv::Error| EvalError::Output(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["true_class".to_string()];
    header.extend(report.class_list.iter().cloned());
    header.push("recall".into());
    w.write_record(&header).map_err(out)?;
    for ((name, row), recall) in report.class_list.iter().zip(&report.confusion).zip(&report.per_class_recall) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(usize::to_string));
        rec.push(opt(*recall));
        w.write_record(&rec).map_err(out)?;
    }
    let bytes = w.into_inner().map_err(|e| EvalError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| EvalError::Output(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub window_minutes: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub feature_subsets: Vec<FeatureSubset>,
    pub models: Vec<ModelSpec>,
    pub repetitions: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            window_minutes: vec![5.0, 10.0, 15.0, 30.0],
            overlaps: vec![0.0, 0.25, 0.5, 0.75],
            feature_subsets: vec![FeatureSubset::all()],
            models: vec![ModelSpec::default()],
            repetitions: 5,
        }
    }
}

/// One grid cell before it runs.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub index: usize,
    pub window_minutes: f64,
    pub overlap: f64,
    pub features: FeatureSubset,
    pub model: ModelSpec,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let empty = [
            ("window_minutes", self.window_minutes.is_empty()),
            ("overlaps", self.overlaps.is_empty()),
            ("feature_subsets", self.feature_subsets.is_empty()),
            ("models", self.models.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(EvalError::Config(format!("{name} must not be empty")));
        }
        if self.repetitions == 0 {
            return Err(EvalError::Config("repetitions must be at least 1".into()));
        }
        if self.feature_subsets.iter().any(|s| s.families().is_empty()) {
            return Err(EvalError::Config("a feature subset is empty".into()));
        }
        Ok(())
    }

    /// Cells in window, overlap, features, model order.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &window_minutes in &self.window_minutes {
            for &overlap in &self.overlaps {
                for features in &self.feature_subsets {
                    for model in &self.models {
                        out.push(GridCell {
                            index: out.len(),
                            window_minutes,
                            overlap,
                            features: features.clone(),
                            model: model.clone(),
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub window_minutes: f64,
    pub overlap: f64,
    pub features: String,
    pub model: String,
    pub mean_accuracy: Option<f64>,
    pub std: Option<f64>,
    pub n_runs: usize,
    pub seeds: Vec<u64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// False when the run stopped before every cell finished.
    pub complete: bool,
    pub cells_total: usize,
    pub rows: Vec<GridRow>,
}

/// Fixed pipeline settings shared by every cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridBase {
    pub segmentation: SegmentationConfig,
    pub features: FeatureConfig,
}

fn run_cell(
    trips: &[CleanTrip],
    base: &GridBase,
    cell: &GridCell,
    repetitions: usize,
    seed: u64,
) -> GridRow {
    let seeds: Vec<u64> = (0..repetitions)
        .map(|r| derive_seed(seed, &format!("grid/{}/{}", cell.index, r)))
        .collect();
    let mut row = GridRow {
        window_minutes: cell.window_minutes,
        overlap: cell.overlap,
        features: cell.features.label(),
        model: cell.model.kind().name().to_string(),
        mean_accuracy: None,
        std: None,
        n_runs: 0,
        seeds: seeds.clone(),
        error: None,
    };
    let result = (|| -> Result<Vec<f64>, EvalError> {
        let seg = SegmentationConfig {
            window_minutes: cell.window_minutes,
            overlap_fraction: cell.overlap,
            ..base.segmentation.clone()
        };
        let feat = base.features.with_subset(&cell.features);
        let split = featurize_trips(trips, None, &seg, &feat)?;
        let train = split.train_dataset()?;
        let test = split.test_dataset()?;
        seeds
            .iter()
            .map(|&s| {
                let model = train_model(&train, &cell.model, s)?;
                Ok(evaluate(&model, &test)?.accuracy)
            })
            .collect()
    })();
    match result {
        Ok(acc) => {
            let n = acc.len() as f64;
            let mean = acc.iter().sum::<f64>() / n;
            let var = acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
            row.mean_accuracy = Some(mean);
            row.std = Some(var.sqrt());
            row.n_runs = acc.len();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Sorts by mean accuracy, best first; failed cells go last. Stable.
pub fn sort_rows(rows: &mut [GridRow]) {
    rows.sort_by(|a, b| match (a.mean_accuracy, b.mean_accuracy) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
}

pub fn run_grid(
    trips: &[CleanTrip],
    grid: &GridSpec,
    base: &GridBase,
    seed: u64,
) -> Result<GridReport, EvalError> {
    run_grid_with(trips, grid, base, seed, |_, _, _| true)
}

/// Runs every cell in order. After each cell `progress(row, done, total)` is
/// called; returning `false` stops early and the report is marked incomplete.
pub fn run_grid_with<F>(
    trips: &[CleanTrip],
    grid: &GridSpec,
    base: &GridBase,
    seed: u64,
    mut progress: F,
) -> Result<GridReport, EvalError>
where
    F: FnMut(&GridRow, usize, usize) -> bool,
{
    grid.validate()?;
    let mut drivers: Vec<&str> = trips.iter().map(|t| t.driver_id.as_str()).collect();
    drivers.sort_unstable();
    drivers.dedup();
    if drivers.len() < 2 {
        return Err(EvalError::Config(format!(
            "grid needs trips from at least 2 drivers, found {}",
            drivers.len()
        )));
    }
    let cells = grid.cells();
    let mut rows = Vec::with_capacity(cells.len());
    let mut complete = true;
    for cell in &cells {
        let row = run_cell(trips, base, cell, grid.repetitions, seed);
        let go_on = progress(&row, rows.len() + 1, cells.len());
        rows.push(row);
        if !go_on && rows.len() < cells.len() {
            complete = false;
            break;
        }
    }
    sort_rows(&mut rows);
    Ok(GridReport {
        complete,
        cells_total: cells.len(),
        rows,
    })
}

pub const REPORT_COLUMNS: [&str; 7] = [
    "window_minutes",
    "overlap",
    "features",
    "model",
    "mean_accuracy",
    "std",
    "error",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn report_csv(rows: &[GridRow]) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let out = |e: csv::Error| EvalError::Output(e.to_string());
    w.write_record(REPORT_COLUMNS).map_err(out)?;
    for r in rows {
        w.write_record([
            format!("{:?}", r.window_minutes),
            format!("{:?}", r.overlap),
            r.features.clone(),
            r.model.clone(),
            opt(r.mean_accuracy),
            opt(r.std),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(out)?;
    }
    let bytes = w.into_inner().map_err(|e| EvalError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| EvalError::Output(e.to_string()))
}

pub fn report_json(report: &GridReport) -> Result<String, EvalError> {
    serde_json::to_string_pretty(report).map_err(|e| EvalError::Output(e.to_string()))
}

/// Aligned plain-text table with accuracies in percent.
pub fn report_text(report: &GridReport) -> String {
    let header = ["Window (min)", "Overlap (%)", "Features", "Model", "Accuracy (%)", "Std"];
    let body: Vec<[String; 6]> = report
        .rows
        .iter()
        .map(|r| {
            let (acc, std) = match (r.mean_accuracy, r.std) {
                (Some(a), Some(s)) => (format!("{:.1}", 100.0 * a), format!("{:.1}", 100.0 * s)),
                _ => (
                    "failed".to_string(),
                    r.error.clone().unwrap_or_default(),
                ),
            };
            [
                format!("{}", r.window_minutes),
                format!("{}", 100.0 * r.overlap),
                r.features.clone(),
                r.model.clone(),
                acc,
                std,
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &header.map(String::from));
    line(&mut out, &widths.map(|w| "-".repeat(w)));
    for row in &body {
        line(&mut out, row);
    }
    if !report.complete {
        let _ = writeln!(
            out,
            "incomplete: {} of {} cells finished",
            report.rows.len(),
            report.cells_total
        );
    }
    out
}

/// The three renderings of one grid report.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedReport {
    pub text: String,
    pub csv: String,
    pub json: String,
}

pub fn render_report(report: &GridReport) -> Result<RenderedReport, EvalError> {
    Ok(RenderedReport {
        text: report_text(report),
        csv: report_csv(&report.rows)?,
        json: report_json(report)?,
    })
}
