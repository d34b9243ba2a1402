//! Run configuration: JSON file values overlaid by command-line flags.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use tempocast_core::dataset::TimeSplit;
use tempocast_core::eventlog::{Calendar, IngestOptions, NamespaceRange};
use tempocast_core::features::{PeriodSeries, DEFAULT_WINDOWS};
use tempocast_core::forecast::DriftSpace;
use tempocast_core::gbt::GbtParams;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtConfig {
    pub weak_count: usize,
    pub shrinkage: f64,
    pub subsample_fraction: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbtConfig {
    fn default() -> Self {
        let p = GbtParams::default();
        GbtConfig {
            weak_count: p.weak_count,
            shrinkage: p.shrinkage,
            subsample_fraction: p.subsample_fraction,
            max_depth: p.max_depth,
            min_samples_leaf: p.min_samples_leaf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Vec<PathBuf>,
    pub epoch: String,
    pub has_header: bool,
    pub namespaces: Option<String>,
    pub t_test: Option<f64>,
    pub horizon: f64,
    pub lookback: f64,
    pub periods: Vec<f64>,
    pub gbt: GbtConfig,
    pub drift: bool,
    pub drift_space: String,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: Vec::new(),
            epoch: "2001-01-01".into(),
            has_header: true,
            namespaces: None,
            t_test: None,
            horizon: 5.0,
            lookback: 12.0,
            periods: DEFAULT_WINDOWS.to_vec(),
            gbt: GbtConfig::default(),
            drift: true,
            drift_space: "log".into(),
            seed: 0,
            threads: None,
        }
    }
}

/// A validated [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub inputs: Vec<PathBuf>,
    pub ingest: IngestOptions,
    pub split: TimeSplit,
    pub periods: PeriodSeries,
    pub gbt: GbtParams,
    pub drift: Option<DriftSpace>,
}

impl RunConfig {
    /// Reads a config file. A run manifest is accepted too; its `config`
    /// member is used.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let value = match value.get("config") {
            Some(inner) if value.get("tool").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn calendar(&self) -> Result<Calendar, CliError> {
        let date = NaiveDate::parse_from_str(&self.epoch, "%Y-%m-%d").map_err(|e| CliError::Config(format!("epoch {:?}: {e}", self.epoch)))?;
        Calendar::new(date).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn ingest_options(&self) -> Result<IngestOptions, CliError> {
        let namespace_filter = match &self.namespaces {
            Some(s) => Some(s.parse::<NamespaceRange>().map_err(|e| CliError::Config(e.to_string()))?),
            None => None,
        };
        Ok(IngestOptions { has_header: self.has_header, namespace_filter, calendar: self.calendar()? })
    }

    pub fn gbt_params(&self) -> Result<GbtParams, CliError> {
        let g = &self.gbt;
        let params = GbtParams {
            weak_count: g.weak_count,
            shrinkage: g.shrinkage,
            subsample_fraction: g.subsample_fraction,
            max_depth: g.max_depth,
            min_samples_leaf: g.min_samples_leaf,
            seed: self.seed,
        };
        params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(params)
    }

    pub fn split(&self) -> Result<TimeSplit, CliError> {
        let t_test = self.t_test.ok_or_else(|| CliError::Config("--t-test is required".into()))?;
        TimeSplit::new(t_test, self.horizon, self.lookback).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn drift_mode(&self) -> Result<Option<DriftSpace>, CliError> {
        let space: DriftSpace = self.drift_space.parse().map_err(|e: tempocast_core::forecast::ForecastError| CliError::Config(e.to_string()))?;
        Ok(self.drift.then_some(space))
    }

    /// Checks everything that can be checked before touching input files.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        if self.input.is_empty() {
            return Err(CliError::Config("at least one --input is required".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        let split = self.split()?;
        let periods = PeriodSeries::new(self.periods.clone(), split.t_train()).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Resolved {
            inputs: self.input.clone(),
            ingest: self.ingest_options()?,
            split,
            periods,
            gbt: self.gbt_params()?,
            drift: self.drift_mode()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig { input: vec!["x.csv".into()], t_test: Some(116.0), ..Default::default() }
    }

    #[test]
    fn training_shape() {
        let r = base().resolve().unwrap();
        assert_eq!((r.split.t_train(), r.split.t_test()), (111.0, 116.0));
        assert_eq!(r.periods.cap(), 111.0);
    }

    #[test]
    fn moredata_shape_caps_at_106() {
        let r = RunConfig { t_test: Some(111.0), ..base() }.resolve().unwrap();
        assert_eq!(r.split.t_train(), 106.0);
        assert_eq!(r.periods.effective(9), 106.0);
    }

    #[test]
    fn short_history_rejected() {
        let err = RunConfig { t_test: Some(16.0), ..base() }.resolve().unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn bad_values_rejected() {
        for cfg in [
            RunConfig { input: vec![], ..base() },
            RunConfig { t_test: None, ..base() },
            RunConfig { epoch: "2001-01-05".into(), ..base() },
            RunConfig { drift_space: "linear".into(), ..base() },
            RunConfig { namespaces: Some("3".into()), ..base() },
            RunConfig { periods: vec![2.0, 1.0], ..base() },
            RunConfig { gbt: GbtConfig { shrinkage: 2.0, ..Default::default() }, ..base() },
            RunConfig { threads: Some(0), ..base() },
        ] {
            assert!(matches!(cfg.resolve(), Err(CliError::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let cfg = base();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        assert!(serde_json::from_str::<RunConfig>(r#"{"t_tset": 3}"#).is_err());
        let partial: RunConfig = serde_json::from_str(r#"{"t_test": 40, "gbt": {"weak_count": 7}}"#).unwrap();
        assert_eq!(partial.gbt.weak_count, 7);
        assert_eq!(partial.gbt.shrinkage, 0.1);
    }
}
