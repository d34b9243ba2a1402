//! Seeded synthetic edit logs.
//!
//! Each editor gets a random profile (base rate, monthly decay, active span,
//! article pool). Edit times follow a counting process whose rate is
//! constant within each month of the editor's span and shrinks by the decay
//! factor from one month to the next. Every editor draws from its own
//! ChaCha stream, so output does not depend on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::eventlog::{Calendar, EditEvent, MonthPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid simulation parameter: {0}")]
    Params(String),
}

/// Multiplies every rate from `at` onward by `factor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeShift {
    pub at: f64,
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSampler {
    /// Base rate range in edits/month, sampled log-uniformly.
    pub rate: (f64, f64),
    /// Monthly multiplicative rate factor range, sampled uniformly.
    pub decay: (f64, f64),
    /// Starts are uniform on `[0, start_max)`; zero starts everyone at 0.
    pub start_max: f64,
    /// Mean of the exponential active span; `None` keeps editors active
    /// until the horizon.
    pub mean_lifetime: Option<f64>,
    /// Article pool size range, sampled uniformly.
    pub article_pool: (u64, u64),
    pub regime_shift: Option<RegimeShift>,
}

impl Default for ProfileSampler {
    fn default() -> Self {
        ProfileSampler {
            rate: (0.3, 40.0),
            decay: (0.8, 1.0),
            start_max: 40.0,
            mean_lifetime: Some(20.0),
            article_pool: (1, 50),
            regime_shift: None,
        }
    }
}

impl ProfileSampler {
    /// Every editor active over the whole horizon at one fixed rate.
    pub fn constant_rate(rate: f64) -> Self {
        ProfileSampler { rate: (rate, rate), decay: (1.0, 1.0), start_max: 0.0, mean_lifetime: None, article_pool: (10, 10), regime_shift: None }
    }

    fn validate(&self, horizon: f64) -> Result<(), SynthError> {
        let err = |m: &str| Err(SynthError::Params(m.to_string()));
        if !(self.rate.0 > 0.0 && self.rate.0 <= self.rate.1 && self.rate.1.is_finite()) {
            return err("rate range must satisfy 0 < lo <= hi");
        }
        if !(self.decay.0 > 0.0 && self.decay.0 <= self.decay.1 && self.decay.1 <= 1.0) {
            return err("decay range must lie in (0, 1]");
        }
        if !(self.start_max >= 0.0 && self.start_max < horizon) {
            return err("start_max must lie in [0, horizon)");
        }
        if let Some(m) = self.mean_lifetime {
            if !(m > 0.0 && m.is_finite()) {
                return err("mean lifetime must be positive");
            }
        }
        if !(self.article_pool.0 >= 1 && self.article_pool.0 <= self.article_pool.1) {
            return err("article pool range must satisfy 1 <= lo <= hi");
        }
        if let Some(s) = self.regime_shift {
            if !(s.factor > 0.0 && s.factor.is_finite() && s.at.is_finite()) {
                return err("regime shift factor must be positive");
            }
        }
        Ok(())
    }

    fn sample(&self, horizon: f64, rng: &mut ChaCha8Rng) -> EditorProfile {
        let base_rate = if self.rate.0 < self.rate.1 {
            (rng.random_range(self.rate.0.ln()..self.rate.1.ln())).exp()
        } else {
            self.rate.0
        };
        let decay = if self.decay.0 < self.decay.1 { rng.random_range(self.decay.0..self.decay.1) } else { self.decay.0 };
        let start = if self.start_max > 0.0 { rng.random_range(0.0..self.start_max) } else { 0.0 };
        let stop = match self.mean_lifetime {
            Some(m) => {
                let span: f64 = Exp::new(1.0 / m).expect("positive rate").sample(rng);
                (start + span).min(horizon)
            }
            None => horizon,
        };
        let article_pool = rng.random_range(self.article_pool.0..=self.article_pool.1);
        EditorProfile { base_rate, decay, start, stop: if stop > start { stop } else { horizon }, article_pool }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditorProfile {
    pub base_rate: f64,
    pub decay: f64,
    pub start: f64,
    pub stop: f64,
    pub article_pool: u64,
}

impl EditorProfile {
    fn rate_at(&self, t: f64, shift: Option<RegimeShift>) -> f64 {
        let month = (t - self.start).floor();
        let scale = shift.filter(|s| t >= s.at).map_or(1.0, |s| s.factor);
        self.base_rate * self.decay.powf(month) * scale
    }

    /// Piece boundaries where the rate may change.
    fn pieces(&self, shift: Option<RegimeShift>) -> Vec<(f64, f64)> {
        let mut cuts = vec![self.start];
        let mut k = 1.0;
        while self.start + k < self.stop {
            cuts.push(self.start + k);
            k += 1.0;
        }
        if let Some(s) = shift {
            if s.at > self.start && s.at < self.stop {
                cuts.push(s.at);
            }
        }
        cuts.push(self.stop);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub population: usize,
    pub horizon: f64,
    pub profiles: ProfileSampler,
    pub seed: u64,
}

/// Generates a time-ordered edit log. User ids run from 1 to `population`
/// and revision ids follow log order.
pub fn simulate(params: &SimParams, calendar: &Calendar) -> Result<Vec<EditEvent>, SynthError> {
    if params.population == 0 {
        return Err(SynthError::Params("population must be at least 1".into()));
    }
    if !(params.horizon > 0.0 && params.horizon.is_finite()) {
        return Err(SynthError::Params("horizon must be positive".into()));
    }
    params.profiles.validate(params.horizon)?;

    let per_editor: Vec<Vec<EditEvent>> = (0..params.population)
        .into_par_iter()
        .map(|i| {
            let mut rng = editor_rng(params.seed, i);
            let profile = params.profiles.sample(params.horizon, &mut rng);
            editor_events(i as u64 + 1, &profile, params.profiles.regime_shift, params.horizon, calendar, &mut rng)
        })
        .collect();
    Ok(finish(per_editor))
}

fn editor_rng(seed: u64, editor: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(editor as u64);
    rng
}

fn editor_events(
    user_id: u64,
    profile: &EditorProfile,
    shift: Option<RegimeShift>,
    horizon: f64,
    calendar: &Calendar,
    rng: &mut ChaCha8Rng,
) -> Vec<EditEvent> {
    let mut events = Vec::new();
    for (lo, hi) in profile.pieces(shift) {
        let mean = profile.rate_at(lo, shift) * (hi - lo);
        if mean.is_nan() || mean <= 0.0 {
            continue;
        }
        let count = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
        for _ in 0..count {
            let t = rng.random_range(lo..hi);
            events.push(make_event(user_id, t, profile.article_pool, horizon, calendar, rng));
        }
    }
    events
}

fn make_event(user_id: u64, t: f64, pool: u64, horizon: f64, calendar: &Calendar, rng: &mut ChaCha8Rng) -> EditEvent {
    let t = t.clamp(0.0, horizon);
    let time = calendar.floor_to_second(MonthPoint::new(t).expect("finite non-negative time"));
    let namespace = if rng.random_bool(0.8) { 0 } else { rng.random_range(1..=5) };
    EditEvent { user_id, article_id: rng.random_range(0..pool), revision_id: 0, namespace, time }
}

fn finish(per_editor: Vec<Vec<EditEvent>>) -> Vec<EditEvent> {
    let mut events: Vec<EditEvent> = per_editor.into_iter().flatten().collect();
    events.sort_by(|a, b| a.time.value().total_cmp(&b.time.value()).then(a.user_id.cmp(&b.user_id)));
    for (i, e) in events.iter_mut().enumerate() {
        e.revision_id = i as u64 + 1;
    }
    events
}

/// Deterministic growth scenario: every editor makes `first_count` edits
/// in the first block of `block_months`, and each later block holds
/// `2c + 1` edits where the previous block held `c`. Edits are spread
/// evenly within each block, so per-block counts are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockGrowth {
    pub population: usize,
    pub block_months: f64,
    pub blocks: usize,
    pub first_count: u64,
    pub article_pool: u64,
    pub seed: u64,
}

impl BlockGrowth {
    pub fn count_in_block(&self, block: usize) -> u64 {
        (0..block).fold(self.first_count, |c, _| 2 * c + 1)
    }
}

pub fn simulate_block_growth(params: &BlockGrowth, calendar: &Calendar) -> Result<Vec<EditEvent>, SynthError> {
    if params.population == 0 || params.blocks == 0 || params.article_pool == 0 {
        return Err(SynthError::Params("population, blocks and article pool must be positive".into()));
    }
    if !(params.block_months > 0.0 && params.block_months.is_finite()) {
        return Err(SynthError::Params("block length must be positive".into()));
    }
    let horizon = params.block_months * params.blocks as f64;
    let per_editor: Vec<Vec<EditEvent>> = (0..params.population)
        .into_par_iter()
        .map(|i| {
            let mut rng = editor_rng(params.seed, i);
            let mut events = Vec::new();
            for b in 0..params.blocks {
                let c = params.count_in_block(b);
                let start = b as f64 * params.block_months;
                let step = params.block_months / c as f64;
                for j in 0..c {
                    let t = start + (j as f64 + 0.5) * step;
                    events.push(make_event(i as u64 + 1, t, params.article_pool, horizon, calendar, &mut rng));
                }
            }
            events
        })
        .collect();
    Ok(finish(per_editor))
}
