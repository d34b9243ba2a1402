//! Temporal-dynamics features over exponentially spaced look-back windows.
//!
//! For an editor at time `t` and each window `w` the vector holds the edit
//! count and the distinct-article count over `[t - w, t)`, followed by the
//! log-scaled span between the editor's first and last edit before `t`.

use std::collections::HashSet;
use std::io::Write;

use thiserror::Error;

use crate::eventlog::EditorHistory;

/// Window lengths in months: doubling from 1/16 to 4, then tripling to 108.
pub const DEFAULT_WINDOWS: [f64; 10] = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0, 1.0, 2.0, 4.0, 12.0, 36.0, 108.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("window cap must be positive and finite, got {0}")]
    Cap(f64),
    #[error("windows must be positive and strictly ascending")]
    Windows,
    #[error("period prefix length {len} outside 1..={max}")]
    Prefix { len: usize, max: usize },
    #[error("editor {user_id} has no events before t={t}")]
    NoHistory { user_id: u64, t: f64 },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for FeatureError {
    fn from(e: std::io::Error) -> Self {
        FeatureError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSeries {
    windows: Vec<f64>,
    cap: f64,
}

impl PeriodSeries {
    pub fn new(windows: Vec<f64>, cap: f64) -> Result<Self, FeatureError> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(FeatureError::Cap(cap));
        }
        let ascending = windows.windows(2).all(|p| p[0] < p[1]);
        if windows.is_empty() || !ascending || windows.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(FeatureError::Windows);
        }
        Ok(PeriodSeries { windows, cap })
    }

    /// The ten default windows, capped at `cap` months when used.
    pub fn default_periods(cap: f64) -> Result<Self, FeatureError> {
        Self::new(DEFAULT_WINDOWS.to_vec(), cap)
    }

    pub fn windows(&self) -> &[f64] {
        &self.windows
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn effective(&self, j: usize) -> f64 {
        self.windows[j].min(self.cap)
    }

    pub fn effective_windows(&self) -> impl Iterator<Item = f64> + '_ {
        self.windows.iter().map(move |w| w.min(self.cap))
    }

    /// Same windows with a different cap.
    pub fn with_cap(&self, cap: f64) -> Result<Self, FeatureError> {
        Self::new(self.windows.clone(), cap)
    }

    /// The `len` shortest windows.
    pub fn prefix(&self, len: usize) -> Result<Self, FeatureError> {
        if len == 0 || len > self.windows.len() {
            return Err(FeatureError::Prefix { len, max: self.windows.len() });
        }
        Self::new(self.windows[..len].to_vec(), self.cap)
    }

    /// Feature vector width: two counts per window plus tenure.
    pub fn width(&self) -> usize {
        2 * self.windows.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub edits: Vec<u32>,
    pub articles: Vec<u32>,
    pub log_tenure: f64,
}

impl FeatureVector {
    pub fn width(&self) -> usize {
        self.edits.len() + self.articles.len() + 1
    }

    /// Flattens to `e_1..e_k, a_1..a_k, log_tenure`.
    pub fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.width());
        row.extend(self.edits.iter().map(|&c| f64::from(c)));
        row.extend(self.articles.iter().map(|&c| f64::from(c)));
        row.push(self.log_tenure);
        row
    }
}

/// Edit and distinct-article counts over `[t - window, t)`.
pub fn window_counts(history: &EditorHistory, t: f64, window: f64) -> (usize, usize) {
    let events = history.between(t - window, t);
    let articles: HashSet<u64> = events.iter().map(|e| e.article_id).collect();
    (events.len(), articles.len())
}

/// Builds the feature vector of `history` at `t` using only events before `t`.
pub fn featurize(history: &EditorHistory, t: f64, periods: &PeriodSeries) -> Result<FeatureVector, FeatureError> {
    let past = history.before(t);
    let (first, last) = match (past.first(), past.last()) {
        (Some(f), Some(l)) => (f.time.value(), l.time.value()),
        _ => return Err(FeatureError::NoHistory { user_id: history.user_id(), t }),
    };

    // Effective windows never shrink, so one backward walk over the past
    // serves every window.
    let k = periods.len();
    let mut edits = Vec::with_capacity(k);
    let mut articles = Vec::with_capacity(k);
    let mut seen = HashSet::new();
    let mut idx = past.len();
    for w in periods.effective_windows() {
        let start = t - w;
        while idx > 0 && past[idx - 1].time.value() >= start {
            idx -= 1;
            seen.insert(past[idx].article_id);
        }
        edits.push((past.len() - idx) as u32);
        articles.push(seen.len() as u32);
    }

    Ok(FeatureVector { edits, articles, log_tenure: (last - first).ln_1p() })
}

/// Writes `user_id,e_1..e_k,a_1..a_k,log_tenure` rows.
pub fn write_feature_matrix<'a, W, I>(rows: I, k: usize, sink: W) -> Result<(), FeatureError>
where
    W: Write,
    I: IntoIterator<Item = (u64, &'a FeatureVector)>,
{
    let mut out = std::io::BufWriter::new(sink);
    out.write_all(feature_header(k).join(",").as_bytes())?;
    out.write_all(b"\n")?;
    for (user, x) in rows {
        write!(out, "{user}")?;
        for c in x.edits.iter().chain(&x.articles) {
            write!(out, ",{c}")?;
        }
        writeln!(out, ",{}", x.log_tenure)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn feature_header(k: usize) -> Vec<String> {
    let mut cols = vec!["user_id".to_string()];
    cols.extend((1..=k).map(|j| format!("e_{j}")));
    cols.extend((1..=k).map(|j| format!("a_{j}")));
    cols.push("log_tenure".to_string());
    cols
}
