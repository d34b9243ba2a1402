//! Drift correction, count predictions, baselines and RMSLE.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::{count_future_edits, is_active, LabeledExample, PredictionRow};
use crate::eventlog::Histories;
use crate::gbt::{GbtError, GbtModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("no active editors at t={0}; drift is undefined")]
    EmptyPopulation(f64),
    #[error("activity at t={t} needs t >= lookback {lookback}")]
    Lookback { t: f64, lookback: f64 },
    #[error("prediction and actual key sets differ: only predicted {only_pred:?}, only actual {only_actual:?}")]
    KeyMismatch { only_pred: Vec<u64>, only_actual: Vec<u64> },
    #[error("value for user {user_id} must be a non-negative number, got {value}")]
    Negative { user_id: u64, value: f64 },
    #[error("cannot evaluate an empty population")]
    Empty,
    #[error("unknown drift space {0:?}, expected `log` or `raw`")]
    DriftSpace(String),
    #[error(transparent)]
    Model(#[from] GbtError),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for ForecastError {
    fn from(e: std::io::Error) -> Self {
        ForecastError::Io(e.to_string())
    }
}

/// Additive correction to log-space predictions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drift(pub f64);

/// How drift compares the two adjacent horizons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftSpace {
    /// Difference of mean `ln(1 + count)`.
    #[default]
    Log,
    /// `ln(1 + mean after) - ln(1 + mean before)`.
    Raw,
}

impl FromStr for DriftSpace {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log" => Ok(DriftSpace::Log),
            "raw" => Ok(DriftSpace::Raw),
            other => Err(ForecastError::DriftSpace(other.to_string())),
        }
    }
}

impl fmt::Display for DriftSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DriftSpace::Log => "log",
            DriftSpace::Raw => "raw",
        })
    }
}

/// Compares activity in `[t - horizon, t)` with `[t, t + horizon)` over
/// editors active at `t`.
pub fn estimate_drift(histories: &Histories, t: f64, horizon: f64, lookback: f64, space: DriftSpace) -> Result<Drift, ForecastError> {
    if t < lookback {
        return Err(ForecastError::Lookback { t, lookback });
    }
    let pairs: Vec<(f64, f64)> = histories
        .values()
        .filter(|h| is_active(h, t, lookback))
        .map(|h| (h.between(t - horizon, t).len() as f64, count_future_edits(h, t, horizon) as f64))
        .collect();
    if pairs.is_empty() {
        return Err(ForecastError::EmptyPopulation(t));
    }
    let n = pairs.len() as f64;
    let d = match space {
        DriftSpace::Log => pairs.iter().map(|(b, a)| a.ln_1p() - b.ln_1p()).sum::<f64>() / n,
        DriftSpace::Raw => {
            let before = pairs.iter().map(|p| p.0).sum::<f64>() / n;
            let after = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            after.ln_1p() - before.ln_1p()
        }
    };
    Ok(Drift(d))
}

/// `exp(max(y_hat + d, 0)) - 1`.
pub fn count_from_log(y_hat: f64, drift: Drift) -> f64 {
    (y_hat + drift.0).max(0.0).exp_m1()
}

/// Predicted counts for each row.
pub fn predict_counts(model: &GbtModel, drift: Drift, rows: &[PredictionRow]) -> Result<BTreeMap<u64, f64>, ForecastError> {
    rows.iter().map(|r| Ok((r.user_id, count_from_log(model.predict(&r.x.to_row())?, drift)))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub epsilon: f64,
    pub n: usize,
    residuals: BTreeMap<u64, f64>,
}

impl EvalReport {
    /// `ln(1 + p) - ln(1 + a)` per user.
    pub fn residuals(&self) -> &BTreeMap<u64, f64> {
        &self.residuals
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rmsle {:.6}", self.epsilon)?;
        write!(f, "n {}", self.n)
    }
}

fn check_non_negative(m: &BTreeMap<u64, f64>) -> Result<(), ForecastError> {
    match m.iter().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
        Some((&user_id, &value)) => Err(ForecastError::Negative { user_id, value }),
        None => Ok(()),
    }
}

/// Root mean squared logarithmic error over matching users.
pub fn rmsle(pred: &BTreeMap<u64, f64>, actual: &BTreeMap<u64, f64>) -> Result<EvalReport, ForecastError> {
    if pred.len() != actual.len() || pred.keys().ne(actual.keys()) {
        return Err(ForecastError::KeyMismatch {
            only_pred: pred.keys().filter(|k| !actual.contains_key(k)).copied().collect(),
            only_actual: actual.keys().filter(|k| !pred.contains_key(k)).copied().collect(),
        });
    }
    if pred.is_empty() {
        return Err(ForecastError::Empty);
    }
    check_non_negative(pred)?;
    check_non_negative(actual)?;
    let residuals: BTreeMap<u64, f64> = pred.iter().zip(actual.values()).map(|((&u, p), a)| (u, p.ln_1p() - a.ln_1p())).collect();
    let n = residuals.len();
    let epsilon = (residuals.values().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    Ok(EvalReport { epsilon, n, residuals })
}

/// Edits in `[t - horizon, t)` for every editor active at `t`.
pub fn baseline_recent(histories: &Histories, t: f64, horizon: f64, lookback: f64) -> Result<BTreeMap<u64, f64>, ForecastError> {
    if t < lookback {
        return Err(ForecastError::Lookback { t, lookback });
    }
    Ok(histories
        .values()
        .filter(|h| is_active(h, t, lookback))
        .map(|h| (h.user_id(), h.between(t - horizon, t).len() as f64))
        .collect())
}

/// The most-recent-5-months benchmark.
pub fn baseline_recent5(histories: &Histories, t: f64) -> Result<BTreeMap<u64, f64>, ForecastError> {
    baseline_recent(histories, t, 5.0, 12.0)
}

/// One constant count for every row: the inverse transform of the mean
/// training target.
pub fn baseline_constant_mean(train: &[LabeledExample], users: impl IntoIterator<Item = u64>) -> BTreeMap<u64, f64> {
    let mean = train.iter().map(|e| e.y).sum::<f64>() / train.len().max(1) as f64;
    let p = mean.exp_m1();
    users.into_iter().map(|u| (u, p)).collect()
}

/// Observed edits in `[t, t + horizon)` for the given users.
pub fn actual_counts(histories: &Histories, users: impl IntoIterator<Item = u64>, t: f64, horizon: f64) -> BTreeMap<u64, f64> {
    users
        .into_iter()
        .map(|u| (u, histories.get(&u).map_or(0, |h| count_future_edits(h, t, horizon)) as f64))
        .collect()
}

/// Writes `user_id,prediction` with shortest round-trip decimals.
pub fn write_predictions<W: Write>(pred: &BTreeMap<u64, f64>, sink: W) -> Result<(), ForecastError> {
    let mut out = std::io::BufWriter::new(sink);
    writeln!(out, "user_id,prediction")?;
    for (u, p) in pred {
        writeln!(out, "{u},{p}")?;
    }
    out.flush()?;
    Ok(())
}
