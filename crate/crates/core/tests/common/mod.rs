//! Brute-force reference implementations used only by tests. None of these
//! call into the code paths they check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempocast_core::eventlog::{EditEvent, MonthPoint};

/// Days from 1970-01-01 to a proleptic Gregorian date.
pub fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (m + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Month-point of a timestamp relative to a 2001-01-01 epoch, computed from
/// day numbers rather than calendar tables.
pub fn month_point_oracle(y: i64, mo: i64, d: i64, h: i64, mi: i64, s: i64) -> f64 {
    let months = (y - 2001) * 12 + (mo - 1);
    let (ny, nm) = if mo == 12 { (y + 1, 1) } else { (y, mo + 1) };
    let month_days = days_from_civil(ny, nm, 1) - days_from_civil(y, mo, 1);
    let into = (days_from_civil(y, mo, d) - days_from_civil(y, mo, 1)) * 86_400 + h * 3600 + mi * 60 + s;
    months as f64 + into as f64 / (month_days * 86_400) as f64
}

pub fn days_in_month_oracle(y: i64, m: i64) -> i64 {
    let (ny, nm) = if m == 12 { (y + 1, 1) } else { (y, m + 1) };
    days_from_civil(ny, nm, 1) - days_from_civil(y, m, 1)
}

pub fn random_events(rng: &mut ChaCha8Rng, n: usize, users: u64, horizon: f64) -> Vec<EditEvent> {
    (0..n)
        .map(|i| EditEvent {
            user_id: rng.random_range(1..=users),
            article_id: rng.random_range(0..8),
            revision_id: i as u64,
            namespace: rng.random_range(0..6),
            time: MonthPoint::new(rng.random_range(0.0..horizon)).unwrap(),
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-window scan over every event.
pub fn window_scan(events: &[EditEvent], t: f64, w: f64) -> (usize, usize) {
    let inside: Vec<&EditEvent> = events.iter().filter(|e| e.time.value() >= t - w && e.time.value() < t).collect();
    let arts: BTreeSet<u64> = inside.iter().map(|e| e.article_id).collect();
    (inside.len(), arts.len())
}

pub fn tenure_scan(events: &[EditEvent], t: f64) -> f64 {
    let past: Vec<f64> = events.iter().map(|e| e.time.value()).filter(|&x| x < t).collect();
    let lo = past.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = past.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (1.0 + (hi - lo)).ln()
}

pub fn active_scan(events: &[EditEvent], t: f64, lookback: f64) -> BTreeSet<u64> {
    events.iter().filter(|e| e.time.value() >= t - lookback && e.time.value() < t).map(|e| e.user_id).collect()
}

pub fn count_scan(events: &[EditEvent], user: u64, lo: f64, hi: f64) -> usize {
    events.iter().filter(|e| e.user_id == user && e.time.value() >= lo && e.time.value() < hi).count()
}

pub fn group_scan(events: &[EditEvent]) -> BTreeMap<u64, Vec<EditEvent>> {
    let mut out: BTreeMap<u64, Vec<EditEvent>> = BTreeMap::new();
    for e in events {
        out.entry(e.user_id).or_default().push(*e);
    }
    for v in out.values_mut() {
        // insertion sort keeps the oracle independent of the library's sort
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && key(&v[j - 1]) > key(&v[j]) {
                v.swap(j - 1, j);
                j -= 1;
            }
        }
    }
    out
}

fn key(e: &EditEvent) -> (f64, u64, u64, u16) {
    (e.time.value(), e.revision_id, e.article_id, e.namespace)
}

/// Exhaustive depth-1 regression tree: every feature, every midpoint
/// between distinct values, scored by directly computed sums of squares.
#[derive(Debug, Clone, Copy)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

pub fn stump_oracle(rows: &[Vec<f64>], residuals: &[f64], min_leaf: usize) -> Option<Stump> {
    let width = rows[0].len();
    let sse = |idx: &[usize]| -> (f64, f64) {
        let mean = idx.iter().map(|&i| residuals[i]).sum::<f64>() / idx.len() as f64;
        (idx.iter().map(|&i| (residuals[i] - mean).powi(2)).sum(), mean)
    };
    let all: Vec<usize> = (0..rows.len()).collect();
    let (parent, _) = sse(&all);
    let mut best: Option<(f64, Stump)> = None;
    for f in 0..width {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for pair in vals.windows(2) {
            let thr = (pair[0] + pair[1]) / 2.0;
            let left: Vec<usize> = all.iter().copied().filter(|&i| rows[i][f] < thr).collect();
            let right: Vec<usize> = all.iter().copied().filter(|&i| rows[i][f] >= thr).collect();
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let (sl, ml) = sse(&left);
            let (sr, mr) = sse(&right);
            let gain = parent - sl - sr;
            if gain > 0.0 && best.as_ref().is_none_or(|(g, _)| gain > *g) {
                best = Some((gain, Stump { feature: f, threshold: thr, left: ml, right: mr }));
            }
        }
    }
    best.map(|(_, s)| s)
}

pub fn rmsle_reference(p: &[f64], a: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..p.len() {
        let d = (1.0 + p[i]).ln() - (1.0 + a[i]).ln();
        acc += d * d;
    }
    (acc / p.len() as f64).sqrt()
}
