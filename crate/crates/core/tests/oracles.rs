mod common;

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use common::*;
use rand::Rng;
use tempocast_core::dataset::{active_editors, build_training_set, TimeSplit};
use tempocast_core::eventlog::{build_histories, Calendar};
use tempocast_core::features::{featurize, window_counts, PeriodSeries};
use tempocast_core::forecast::{baseline_recent5, estimate_drift, rmsle, DriftSpace};
use tempocast_core::gbt::{fit, GbtParams, Node};
use tempocast_core::synthgen::{simulate, simulate_block_growth, BlockGrowth, ProfileSampler, SimParams};

#[test]
fn february_noon_matches_day_number_oracle() {
    let got = Calendar::default().parse("2001-02-15 12:00:00").unwrap().value();
    assert!((got - month_point_oracle(2001, 2, 15, 12, 0, 0)).abs() < 1e-12);
    assert!((got - (1.0 + 14.5 / 28.0)).abs() < 1e-12);
}

#[test]
fn random_timestamps_match_calendar_oracle() {
    let cal = Calendar::default();
    let mut r = rng(7);
    for _ in 0..1000 {
        let y = r.random_range(2001..=2030);
        let m = r.random_range(1..=12);
        let d = r.random_range(1..=days_in_month_oracle(y, m));
        let (h, mi, s) = (r.random_range(0..24), r.random_range(0..60), r.random_range(0..60));
        let ts = format!("{y:04}-{m:02}-{d:02} {h:02}:{mi:02}:{s:02}");
        let got = cal.parse(&ts).unwrap().value();
        assert!((got - month_point_oracle(y, m, d, h, mi, s)).abs() < 1e-9, "{ts}");
    }
}

#[test]
fn histories_match_group_and_sort() {
    let events = random_events(&mut rng(1), 1000, 40, 100.0);
    let histories = build_histories(events.clone());
    let oracle = group_scan(&events);
    assert_eq!(histories.len(), oracle.len());
    for (user, evs) in oracle {
        assert_eq!(histories[&user].events(), evs.as_slice());
    }
}

#[test]
fn window_counts_examples() {
    let events: Vec<_> = [115.9, 115.5, 110.0, 50.0]
        .iter()
        .enumerate()
        .map(|(i, &t)| tempocast_core::EditEvent { user_id: 1, article_id: i as u64, revision_id: 0, namespace: 0, time: tempocast_core::MonthPoint::new(t).unwrap() })
        .collect();
    let h = build_histories(events.clone());
    assert_eq!(window_counts(&h[&1], 116.0, 0.125), window_scan(&events, 116.0, 0.125));
    assert_eq!(window_counts(&h[&1], 116.0, 0.125).0, 1);
    assert_eq!(window_counts(&h[&1], 116.0, 12.0), window_scan(&events, 116.0, 12.0));
    assert_eq!(window_counts(&h[&1], 116.0, 12.0).0, 3);
}

#[test]
fn featurize_matches_window_scan() {
    let events = random_events(&mut rng(2), 20_000, 500, 120.0);
    let histories = build_histories(events.clone());
    let t = 116.0;
    let periods = PeriodSeries::default_periods(111.0).unwrap();
    let mut checked = 0;
    for (user, h) in &histories {
        let mine: Vec<_> = events.iter().filter(|e| e.user_id == *user).copied().collect();
        if !mine.iter().any(|e| e.time.value() < t) {
            continue;
        }
        let x = featurize(h, t, &periods).unwrap();
        for (j, w) in periods.windows().iter().enumerate() {
            let (e, a) = window_scan(&mine, t, w.min(111.0));
            assert_eq!((x.edits[j] as usize, x.articles[j] as usize), (e, a));
        }
        assert!((x.log_tenure - tenure_scan(&mine, t)).abs() < 1e-12);
        checked += 1;
    }
    assert!(checked >= 450);
}

#[test]
fn active_set_matches_scan() {
    let events = random_events(&mut rng(3), 3000, 400, 60.0);
    let histories = build_histories(events.clone());
    for t in [12.0, 30.0, 47.5, 60.0] {
        assert_eq!(active_editors(&histories, t, 12.0).unwrap(), active_scan(&events, t, 12.0));
    }
}

#[test]
fn training_set_size_and_labels() {
    let events = random_events(&mut rng(4), 2000, 200, 48.0);
    let histories = build_histories(events.clone());
    let split = TimeSplit::with_defaults(40.0).unwrap();
    let periods = PeriodSeries::default_periods(split.t_train()).unwrap();
    let set = build_training_set(&histories, &split, &periods).unwrap();
    let active = active_scan(&events, 35.0, 12.0);
    assert_eq!(set.len(), active.len());
    for ex in &set {
        assert!(active.contains(&ex.user_id));
        assert_eq!(ex.a as usize, count_scan(&events, ex.user_id, 35.0, 40.0));
        assert!(((ex.y.exp() - 1.0) - ex.a as f64).abs() < 1e-9 * (1.0 + ex.a as f64));
    }
}

#[test]
fn baseline_matches_interval_counts() {
    let events = random_events(&mut rng(5), 3000, 300, 50.0);
    let histories = build_histories(events.clone());
    let b = baseline_recent5(&histories, 40.0).unwrap();
    let active = active_scan(&events, 40.0, 12.0);
    assert_eq!(b.keys().copied().collect::<std::collections::BTreeSet<_>>(), active);
    for (u, p) in b {
        assert_eq!(p as usize, count_scan(&events, u, 35.0, 40.0));
    }
}

#[test]
fn rmsle_matches_reference() {
    let mut r = rng(6);
    let p: Vec<f64> = (0..10_000).map(|_| r.random_range(0.0..500.0)).collect();
    let a: Vec<f64> = (0..10_000).map(|_| r.random_range(0..300) as f64).collect();
    let pm: BTreeMap<u64, f64> = p.iter().enumerate().map(|(i, v)| (i as u64, *v)).collect();
    let am: BTreeMap<u64, f64> = a.iter().enumerate().map(|(i, v)| (i as u64, *v)).collect();
    assert!((rmsle(&pm, &am).unwrap().epsilon - rmsle_reference(&p, &a)).abs() < 1e-12);
}

fn random_regression(r: &mut rand_chacha::ChaCha8Rng, n: usize, width: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..width).map(|_| r.random_range(0..30) as f64).collect()).collect();
    let y = rows.iter().map(|x| (x[0] * 0.1).sin() + x[1 % width] * 0.05 + r.random_range(-0.5..0.5)).collect();
    (rows, y)
}

#[test]
fn single_stump_equals_exhaustive_oracle() {
    let mut r = rng(8);
    for _ in 0..10 {
        let (rows, y) = random_regression(&mut r, 200, 5);
        let params = GbtParams { weak_count: 1, shrinkage: 0.1, subsample_fraction: 1.0, max_depth: 1, min_samples_leaf: 5, seed: 0 };
        let model = fit(&rows, &y, &params).unwrap();
        let base = y.iter().sum::<f64>() / y.len() as f64;
        let residuals: Vec<f64> = y.iter().map(|v| v - base).collect();
        let oracle = stump_oracle(&rows, &residuals, 5).unwrap();
        match model.trees()[0].nodes() {
            [Node::Split { feature, threshold, .. }, Node::Leaf { value: l }, Node::Leaf { value: rv }] => {
                assert_eq!(*feature, oracle.feature);
                assert!((threshold - oracle.threshold).abs() < 1e-12);
                assert!((l - oracle.left).abs() < 1e-12);
                assert!((rv - oracle.right).abs() < 1e-12);
            }
            other => panic!("expected a stump, got {other:?}"),
        }
    }
}

/// Walks preorder nodes by recursive descent, skipping subtrees by size.
fn walk(nodes: &[Node], x: &[f64]) -> f64 {
    fn size(nodes: &[Node], at: usize) -> usize {
        match nodes[at] {
            Node::Leaf { .. } => 1,
            Node::Split { .. } => {
                let l = size(nodes, at + 1);
                1 + l + size(nodes, at + 1 + l)
            }
        }
    }
    let mut at = 0;
    loop {
        match nodes[at] {
            Node::Leaf { value } => return value,
            Node::Split { feature, threshold, .. } => {
                at = if x[feature] < threshold { at + 1 } else { at + 1 + size(nodes, at + 1) };
            }
        }
    }
}

#[test]
fn predictions_match_tree_walk() {
    let mut r = rng(9);
    let (rows, y) = random_regression(&mut r, 300, 4);
    let params = GbtParams { weak_count: 40, min_samples_leaf: 3, max_depth: 4, ..Default::default() };
    let model = fit(&rows, &y, &params).unwrap();
    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| r.random_range(-5.0..35.0)).collect();
        let oracle = model.base_score() + model.shrinkage() * model.trees().iter().map(|t| walk(t.nodes(), &x)).sum::<f64>();
        assert!((model.predict(&x).unwrap() - oracle).abs() < 1e-12);
    }
}

#[test]
fn weak_count_grid_fits() {
    let (rows, y) = random_regression(&mut rng(10), 120, 3);
    for weak_count in (200..=1400).step_by(200) {
        let p = GbtParams { weak_count, min_samples_leaf: 5, ..Default::default() };
        let m = fit(&rows, &y, &p).unwrap();
        assert_eq!(m.trees().len(), weak_count);
    }
}

#[test]
fn poisson_total_within_three_sigma() {
    let p = SimParams { population: 10_000, horizon: 10.0, profiles: ProfileSampler::constant_rate(2.0), seed: 2024 };
    let n = simulate(&p, &Calendar::default()).unwrap().len() as f64;
    let (mean, sd) = (200_000.0, 200_000f64.sqrt());
    assert!((n - mean).abs() <= 3.0 * sd, "{n}");
}

#[test]
fn drift_of_doubling_plus_one_is_ln2() {
    assert!(((1.0f64 + (2.0 * 7.0 + 1.0)).ln() - (1.0f64 + 7.0).ln() - LN_2).abs() < 1e-15);
    let g = BlockGrowth { population: 50, block_months: 5.0, blocks: 6, first_count: 2, article_pool: 4, seed: 3 };
    let histories = build_histories(simulate_block_growth(&g, &Calendar::default()).unwrap());
    let d = estimate_drift(&histories, 20.0, 5.0, 12.0, DriftSpace::Log).unwrap();
    assert!((d.0 - LN_2).abs() < 1e-9);
}
