//! Self-supervised example construction.
//!
//! Labels come from shifting the prediction point back by the horizon: at
//! `t_train = t_test - horizon` the following `horizon` months are already
//! observed, so each editor active at `t_train` yields a labelled example.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::eventlog::{EditorHistory, Histories};
use crate::features::{feature_header, featurize, FeatureError, FeatureVector, PeriodSeries};

pub const DEFAULT_HORIZON: f64 = 5.0;
pub const DEFAULT_LOOKBACK: f64 = 12.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("invalid time split: {0}")]
    Split(String),
    #[error("activity at t={t} needs t >= lookback {lookback}")]
    Lookback { t: f64, lookback: f64 },
    #[error("no active editors at t={0}; nothing to train on")]
    EmptyPopulation(f64),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("training set line {line}: {message}")]
    Format { line: u64, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        DatasetError::Io(e.to_string())
    }
}

impl From<csv::Error> for DatasetError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line());
        DatasetError::Format { line, message: e.to_string() }
    }
}

/// Prediction point, horizon and activity look-back, all in months.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSplit {
    t_test: f64,
    horizon: f64,
    lookback: f64,
}

impl TimeSplit {
    pub fn new(t_test: f64, horizon: f64, lookback: f64) -> Result<Self, DatasetError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(DatasetError::Split(format!("horizon must be positive, got {horizon}")));
        }
        if !(lookback.is_finite() && lookback > 0.0) {
            return Err(DatasetError::Split(format!("lookback must be positive, got {lookback}")));
        }
        if !t_test.is_finite() || t_test - horizon < lookback {
            return Err(DatasetError::Split(format!(
                "t_train = t_test - {horizon} = {} must be at least the {lookback}-month lookback",
                t_test - horizon
            )));
        }
        Ok(TimeSplit { t_test, horizon, lookback })
    }

    /// Split with the default 5-month horizon and 12-month look-back.
    pub fn with_defaults(t_test: f64) -> Result<Self, DatasetError> {
        Self::new(t_test, DEFAULT_HORIZON, DEFAULT_LOOKBACK)
    }

    pub fn t_test(&self) -> f64 {
        self.t_test
    }

    pub fn t_train(&self) -> f64 {
        self.t_test - self.horizon
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn lookback(&self) -> f64 {
        self.lookback
    }

    /// The split one horizon earlier: it trains at `t_train - horizon` and
    /// predicts at `t_train`, where labels are observable.
    pub fn shifted_back(&self) -> Result<Self, DatasetError> {
        Self::new(self.t_train(), self.horizon, self.lookback)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub user_id: u64,
    pub x: FeatureVector,
    /// `ln(1 + a)`.
    pub y: f64,
    pub a: u64,
}

impl LabeledExample {
    pub fn new(user_id: u64, x: FeatureVector, a: u64) -> Self {
        LabeledExample { user_id, x, y: (a as f64).ln_1p(), a }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub user_id: u64,
    pub x: FeatureVector,
}

pub fn is_active(history: &EditorHistory, t: f64, lookback: f64) -> bool {
    !history.between(t - lookback, t).is_empty()
}

/// Editors with at least one event in `[t - lookback, t)`.
pub fn active_editors(histories: &Histories, t: f64, lookback: f64) -> Result<BTreeSet<u64>, DatasetError> {
    if t < lookback {
        return Err(DatasetError::Lookback { t, lookback });
    }
    Ok(histories.values().filter(|h| is_active(h, t, lookback)).map(EditorHistory::user_id).collect())
}

/// Events in `[t, t + horizon)`.
pub fn count_future_edits(history: &EditorHistory, t: f64, horizon: f64) -> usize {
    history.between(t, t + horizon).len()
}

fn active_histories(histories: &Histories, t: f64, lookback: f64) -> Result<Vec<&EditorHistory>, DatasetError> {
    if t < lookback {
        return Err(DatasetError::Lookback { t, lookback });
    }
    Ok(histories.values().filter(|h| is_active(h, t, lookback)).collect())
}

/// Feature windows never reach past `t_train`, in both phases.
fn capped(periods: &PeriodSeries, split: &TimeSplit) -> Result<PeriodSeries, DatasetError> {
    Ok(periods.with_cap(periods.cap().min(split.t_train()))?)
}

/// Labelled examples at `t_train`, sorted by user id.
pub fn build_training_set(histories: &Histories, split: &TimeSplit, periods: &PeriodSeries) -> Result<Vec<LabeledExample>, DatasetError> {
    let t = split.t_train();
    let active = active_histories(histories, t, split.lookback())?;
    if active.is_empty() {
        return Err(DatasetError::EmptyPopulation(t));
    }
    let periods = capped(periods, split)?;
    active
        .par_iter()
        .map(|h| {
            let x = featurize(h, t, &periods)?;
            Ok(LabeledExample::new(h.user_id(), x, count_future_edits(h, t, split.horizon()) as u64))
        })
        .collect()
}

/// Unlabelled rows at `t_test`, sorted by user id.
pub fn build_prediction_set(histories: &Histories, split: &TimeSplit, periods: &PeriodSeries) -> Result<Vec<PredictionRow>, DatasetError> {
    let t = split.t_test();
    let active = active_histories(histories, t, split.lookback())?;
    let periods = capped(periods, split)?;
    active
        .par_iter()
        .map(|h| Ok(PredictionRow { user_id: h.user_id(), x: featurize(h, t, &periods)? }))
        .collect()
}

/// Writes `user_id,e_1..e_k,a_1..a_k,log_tenure,y,a`.
pub fn write_training_set<W: Write>(examples: &[LabeledExample], sink: W) -> Result<(), DatasetError> {
    let k = examples.first().map_or(0, |e| e.x.edits.len());
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = feature_header(k);
    header.push("y".into());
    header.push("a".into());
    writer.write_record(&header)?;
    for e in examples {
        let mut rec = vec![e.user_id.to_string()];
        rec.extend(e.x.edits.iter().chain(&e.x.articles).map(u32::to_string));
        rec.push(e.x.log_tenure.to_string());
        rec.push(e.y.to_string());
        rec.push(e.a.to_string());
        writer.write_record(&rec)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads the format written by [`write_training_set`].
pub fn read_training_set<R: Read>(source: R) -> Result<Vec<LabeledExample>, DatasetError> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader.headers()?.clone();
    let cols = headers.len();
    if cols < 5 || (cols - 4) % 2 != 0 {
        return Err(DatasetError::Format { line: 1, message: format!("unexpected column count {cols}") });
    }
    let k = (cols - 4) / 2;
    let mut expected = feature_header(k);
    expected.push("y".into());
    expected.push("a".into());
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(DatasetError::Format { line: 1, message: format!("expected header {}", expected.join(",")) });
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |col: usize| DatasetError::Format { line, message: format!("bad value {:?} in column {}", &rec[col], &headers[col]) };
        let int = |col: usize| rec[col].parse::<u32>().map_err(|_| bad(col));
        let user_id = rec[0].parse().map_err(|_| bad(0))?;
        let edits = (1..=k).map(int).collect::<Result<Vec<_>, _>>()?;
        let articles = (k + 1..=2 * k).map(int).collect::<Result<Vec<_>, _>>()?;
        let log_tenure = rec[2 * k + 1].parse().map_err(|_| bad(2 * k + 1))?;
        let y = rec[2 * k + 2].parse().map_err(|_| bad(2 * k + 2))?;
        let a = rec[2 * k + 3].parse().map_err(|_| bad(2 * k + 3))?;
        out.push(LabeledExample { user_id, x: FeatureVector { edits, articles, log_tenure }, y, a });
    }
    Ok(out)
}
