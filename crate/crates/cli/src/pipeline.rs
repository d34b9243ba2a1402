//! Learning and predicting stages, the full run, and parameter sweeps.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use tempocast_core::dataset::{build_prediction_set, build_training_set, LabeledExample, PredictionRow, TimeSplit};
use tempocast_core::eventlog::{build_histories, ingest, Histories, IngestOptions};
use tempocast_core::features::PeriodSeries;
use tempocast_core::forecast::{actual_counts, estimate_drift, predict_counts, rmsle, write_predictions, Drift, DriftSpace};
use tempocast_core::gbt::{fit, write_model, GbtModel, GbtParams};
use tempocast_core::design_matrix;

use crate::config::{Resolved, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadStats {
    pub rows: u64,
    pub events: usize,
    pub dropped: u64,
    pub editors: usize,
}

/// Ingests every input file and groups events per editor.
pub fn load(inputs: &[PathBuf], options: &IngestOptions) -> Result<(Histories, LoadStats), CliError> {
    let mut events = Vec::new();
    let mut stats = LoadStats::default();
    for path in inputs {
        let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let report = ingest(BufReader::new(file), options).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        stats.rows += report.rows;
        stats.dropped += report.dropped;
        events.extend(report.events);
    }
    stats.events = events.len();
    let histories = build_histories(events);
    stats.editors = histories.len();
    Ok((histories, stats))
}

#[derive(Debug, Clone)]
pub struct Learned {
    pub model: GbtModel,
    pub drift: Drift,
    pub training_set: Vec<LabeledExample>,
}

/// Learning stage at `split.t_train()`.
pub fn learn(histories: &Histories, split: &TimeSplit, periods: &PeriodSeries, gbt: &GbtParams, drift: Option<DriftSpace>) -> Result<Learned, CliError> {
    let training_set = build_training_set(histories, split, periods)?;
    let (rows, targets) = design_matrix(&training_set);
    let model = fit(&rows, &targets, gbt)?;
    let drift = match drift {
        Some(space) => estimate_drift(histories, split.t_train(), split.horizon(), split.lookback(), space)?,
        None => Drift(0.0),
    };
    Ok(Learned { model, drift, training_set })
}

/// Predicting stage at `split.t_test()`.
pub fn predict(histories: &Histories, split: &TimeSplit, periods: &PeriodSeries, model: &GbtModel, drift: Drift) -> Result<(Vec<PredictionRow>, BTreeMap<u64, f64>), CliError> {
    let rows = build_prediction_set(histories, split, periods)?;
    let pred = predict_counts(model, drift, &rows)?;
    Ok((rows, pred))
}

/// Writes `contents` next to `path` and renames it into place, so a failed
/// run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    contents(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path).map_err(|e| CliError::Data(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub t_train: f64,
    pub t_test: f64,
    pub input: LoadStats,
    pub train_population: usize,
    pub predict_population: usize,
    pub trees: usize,
    pub drift: f64,
    pub evaluation: Option<f64>,
    pub timings_ms: BTreeMap<&'static str, u128>,
    pub outputs: BTreeMap<&'static str, PathBuf>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub predictions: BTreeMap<u64, f64>,
}

pub const MODEL_FILE: &str = "model.txt";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Learning then predicting; writes the model, predictions and manifest
/// into `out_dir`. With `evaluate`, predictions are also scored against
/// edits observed after `t_test`.
pub fn run_pipeline(config: &RunConfig, out_dir: &Path, evaluate: bool) -> Result<RunSummary, CliError> {
    let resolved = config.resolve()?;
    let Resolved { inputs, ingest, split, periods, gbt, drift } = &resolved;
    let mut timings = BTreeMap::new();

    let clock = Instant::now();
    let (histories, stats) = load(inputs, ingest)?;
    timings.insert("ingest", clock.elapsed().as_millis());

    let clock = Instant::now();
    let learned = learn(&histories, split, periods, gbt, *drift)?;
    timings.insert("learn", clock.elapsed().as_millis());

    let clock = Instant::now();
    let (rows, predictions) = predict(&histories, split, periods, &learned.model, learned.drift)?;
    timings.insert("predict", clock.elapsed().as_millis());

    let evaluation = if evaluate {
        let actual = actual_counts(&histories, predictions.keys().copied(), split.t_test(), split.horizon());
        Some(rmsle(&predictions, &actual)?.epsilon)
    } else {
        None
    };

    let model_path = out_dir.join(MODEL_FILE);
    let pred_path = out_dir.join(PREDICTIONS_FILE);
    write_atomic(&model_path, |w| Ok(write_model(&learned.model, w)?))?;
    write_atomic(&pred_path, |w| Ok(write_predictions(&predictions, w)?))?;

    let manifest = Manifest {
        tool: "tempocast",
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        t_train: split.t_train(),
        t_test: split.t_test(),
        input: stats,
        train_population: learned.training_set.len(),
        predict_population: rows.len(),
        trees: learned.model.trees().len(),
        drift: learned.drift.0,
        evaluation,
        timings_ms: timings,
        outputs: [("model", model_path), ("predictions", pred_path)].into_iter().collect(),
    };
    write_atomic(&out_dir.join(MANIFEST_FILE), |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        Ok(writeln!(w)?)
    })?;
    Ok(RunSummary { manifest, predictions })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepGrid {
    WeakCount(Vec<usize>),
    /// Prefix lengths of the configured period series.
    PeriodPrefix(Vec<usize>),
}

impl SweepGrid {
    pub fn column(&self) -> &'static str {
        match self {
            SweepGrid::WeakCount(_) => "weak_count",
            SweepGrid::PeriodPrefix(_) => "periods",
        }
    }
}

/// Scores a grid by training one horizon earlier than the configured split
/// and evaluating at its `t_train`, where labels exist.
pub fn sweep(histories: &Histories, resolved: &Resolved, grid: &SweepGrid) -> Result<Vec<(usize, f64)>, CliError> {
    let split = resolved.split.shifted_back().map_err(|e| CliError::Config(format!("sweep needs a second backward shift: {e}")))?;
    let periods = resolved.periods.with_cap(split.t_train()).map_err(|e| CliError::Config(e.to_string()))?;
    let score = |model: &GbtModel, drift: Drift, periods: &PeriodSeries| -> Result<f64, CliError> {
        let (_, pred) = predict(histories, &split, periods, model, drift)?;
        let actual = actual_counts(histories, pred.keys().copied(), split.t_test(), split.horizon());
        Ok(rmsle(&pred, &actual)?.epsilon)
    };
    match grid {
        SweepGrid::WeakCount(counts) => {
            let max = *counts.iter().max().ok_or_else(|| CliError::Config("empty sweep grid".into()))?;
            if counts.contains(&0) {
                return Err(CliError::Config("weak_count must be positive".into()));
            }
            // Boosting rounds do not depend on the total count, so one fit
            // with the largest count serves every grid point.
            let gbt = GbtParams { weak_count: max, ..resolved.gbt };
            let learned = learn(histories, &split, &periods, &gbt, resolved.drift)?;
            counts.iter().map(|&n| Ok((n, score(&learned.model.truncated(n), learned.drift, &periods)?))).collect()
        }
        SweepGrid::PeriodPrefix(lens) => {
            if lens.is_empty() {
                return Err(CliError::Config("empty sweep grid".into()));
            }
            lens.iter()
                .map(|&len| {
                    let p = periods.prefix(len).map_err(|e| CliError::Config(e.to_string()))?;
                    let learned = learn(histories, &split, &p, &resolved.gbt, resolved.drift)?;
                    Ok((len, score(&learned.model, learned.drift, &p)?))
                })
                .collect()
        }
    }
}

/// `<column>,rmsle` with RMSLE to six decimals.
pub fn write_sweep_table(column: &str, rows: &[(usize, f64)], w: &mut dyn Write) -> Result<(), CliError> {
    writeln!(w, "{column},rmsle")?;
    for (v, e) in rows {
        writeln!(w, "{v},{e:.6}")?;
    }
    Ok(())
}

pub fn run_sweep(config: &RunConfig, grid: &SweepGrid, out: &Path) -> Result<Vec<(usize, f64)>, CliError> {
    let resolved = config.resolve()?;
    resolved.split.shifted_back().map_err(|e| CliError::Config(format!("sweep needs a second backward shift: {e}")))?;
    let (histories, _) = load(&resolved.inputs, &resolved.ingest)?;
    let rows = sweep(&histories, &resolved, grid)?;
    write_atomic(out, |w| write_sweep_table(grid.column(), &rows, w))?;
    Ok(rows)
}
