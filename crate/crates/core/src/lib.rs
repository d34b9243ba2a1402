//! Forecasting a user's activity over the next few months from the
//! temporal dynamics of their event history.
//!
//! The pipeline shifts the prediction point back by one horizon to obtain
//! labels, describes each active user by event and distinct-item counts
//! over exponentially spaced windows, regresses `ln(1 + count)` with
//! gradient-boosted trees, and corrects predictions by a global drift term.

pub mod dataset;
pub mod eventlog;
pub mod features;
pub mod forecast;
pub mod gbt;
pub mod synthgen;

use thiserror::Error;

pub use dataset::{LabeledExample, PredictionRow, TimeSplit};
pub use eventlog::{Calendar, EditEvent, EditorHistory, Histories, MonthPoint};
pub use features::{FeatureVector, PeriodSeries};
pub use forecast::{Drift, DriftSpace, EvalReport};
pub use gbt::{GbtModel, GbtParams};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    EventLog(#[from] eventlog::EventLogError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Gbt(#[from] gbt::GbtError),
    #[error(transparent)]
    Forecast(#[from] forecast::ForecastError),
    #[error(transparent)]
    Synth(#[from] synthgen::SynthError),
}

/// Feature rows and targets of a training set, ready for [`gbt::fit`].
pub fn design_matrix(examples: &[LabeledExample]) -> (Vec<Vec<f64>>, Vec<f64>) {
    examples.iter().map(|e| (e.x.to_row(), e.y)).unzip()
}
