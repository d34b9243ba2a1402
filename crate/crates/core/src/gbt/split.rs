use std::cmp::Ordering;

/// Best threshold found on one feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub threshold: f64,
    /// Reduction in residual sum of squares.
    pub gain: f64,
}

/// Exact best split of one feature column: `values[i] < threshold` goes left.
///
/// Returns `None` when all values are equal or no threshold leaves at least
/// `min_samples_leaf` rows on each side.
pub fn best_split(values: &[f64], residuals: &[f64], min_samples_leaf: usize) -> Option<SplitCandidate> {
    assert_eq!(values.len(), residuals.len());
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    scan_sorted(&order, values, residuals, min_samples_leaf)
}

/// Scans rows presorted by `values` and returns the split with the largest
/// positive gain. Ties keep the lowest threshold.
pub(crate) fn scan_sorted(sorted: &[usize], values: &[f64], residuals: &[f64], min_leaf: usize) -> Option<SplitCandidate> {
    let n = sorted.len();
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let total: f64 = sorted.iter().map(|&r| residuals[r]).sum();
    let parent = total * total / n as f64;

    let mut best: Option<SplitCandidate> = None;
    let mut left_sum = 0.0;
    for i in 1..n {
        left_sum += residuals[sorted[i - 1]];
        if i < min_leaf {
            continue;
        }
        if n - i < min_leaf {
            break;
        }
        let lo = values[sorted[i - 1]];
        let hi = values[sorted[i]];
        if lo.partial_cmp(&hi) != Some(Ordering::Less) {
            continue;
        }
        let right_sum = total - left_sum;
        let gain = left_sum * left_sum / i as f64 + right_sum * right_sum / (n - i) as f64 - parent;
        if best.is_none_or(|b| gain > b.gain) {
            best = Some(SplitCandidate { threshold: midpoint(lo, hi), gain });
        }
    }
    best.map(|b| SplitCandidate { gain: b.gain.max(0.0), ..b })
}

/// A threshold strictly above `lo` and at most `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}
