use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::{grow, Tree, TreeParams};
use super::{GbtError, GbtParams};

/// Fitted ensemble: `base_score + shrinkage * sum(tree(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    width: usize,
    base_score: f64,
    shrinkage: f64,
    params: GbtParams,
    trees: Vec<Tree>,
}

impl GbtModel {
    pub fn from_parts(width: usize, base_score: f64, params: GbtParams, trees: Vec<Tree>) -> Result<Self, GbtError> {
        params.validate()?;
        if !base_score.is_finite() {
            return Err(GbtError::Params(format!("base score {base_score} is not finite")));
        }
        Ok(GbtModel { width, base_score, shrinkage: params.shrinkage, params, trees })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn params(&self) -> &GbtParams {
        &self.params
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, GbtError> {
        if x.len() != self.width {
            return Err(GbtError::Width { expected: self.width, found: x.len() });
        }
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: &[f64]) -> f64 {
        self.base_score + self.shrinkage * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    /// The model made of the first `n` trees. Boosting rounds do not depend
    /// on `weak_count`, so this equals a fit with `weak_count = n`.
    pub fn truncated(&self, n: usize) -> GbtModel {
        let mut m = self.clone();
        m.trees.truncate(n);
        m.params.weak_count = n.max(1);
        m
    }
}

/// Fits an ensemble to `(rows[i], targets[i])`.
pub fn fit(rows: &[Vec<f64>], targets: &[f64], params: &GbtParams) -> Result<GbtModel, GbtError> {
    fit_traced(rows, targets, params).map(|(m, _)| m)
}

/// Like [`fit`], also returning the full-set mean squared error before the
/// first tree and after each accepted tree.
pub fn fit_traced(rows: &[Vec<f64>], targets: &[f64], params: &GbtParams) -> Result<(GbtModel, Vec<f64>), GbtError> {
    params.validate()?;
    let n = rows.len();
    if n < 2 {
        return Err(GbtError::TooFewRows(n));
    }
    if targets.len() != n {
        return Err(GbtError::Params(format!("{} rows but {} targets", n, targets.len())));
    }
    let width = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(GbtError::Width { expected: width, found: r.len() });
        }
        if !targets[i].is_finite() || r.iter().any(|v| !v.is_finite()) {
            return Err(GbtError::NonFinite(i));
        }
    }

    let columns: Vec<Vec<f64>> = (0..width).map(|f| rows.iter().map(|r| r[f]).collect()).collect();
    let presorted: Vec<Vec<usize>> = columns
        .iter()
        .map(|col| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            order
        })
        .collect();

    let base_score = targets.iter().sum::<f64>() / n as f64;
    let mut fitted = vec![base_score; n];
    let mut residuals: Vec<f64> = targets.iter().map(|y| y - base_score).collect();
    let mut trace = vec![mean_square(&residuals)];
    let sample_size = ((params.subsample_fraction * n as f64).ceil() as usize).clamp(1, n);
    let tree_params = TreeParams { max_depth: params.max_depth, min_samples_leaf: params.min_samples_leaf };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut in_sample = vec![false; n];
    let mut trees = Vec::with_capacity(params.weak_count);

    for _ in 0..params.weak_count {
        if residuals.iter().all(|&r| r == 0.0) {
            break;
        }
        in_sample.fill(sample_size == n);
        if sample_size < n {
            for i in rand::seq::index::sample(&mut rng, n, sample_size) {
                in_sample[i] = true;
            }
        }
        let sorted = presorted.iter().map(|order| order.iter().copied().filter(|&r| in_sample[r]).collect()).collect();
        let tree = grow(&columns, &residuals, sorted, &tree_params);
        for i in 0..n {
            fitted[i] += params.shrinkage * tree.predict(&rows[i]);
            residuals[i] = targets[i] - fitted[i];
        }
        trace.push(mean_square(&residuals));
        trees.push(tree);
    }

    let model = GbtModel { width, base_score, shrinkage: params.shrinkage, params: *params, trees };
    Ok((model, trace))
}

fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|r| r * r).sum::<f64>() / v.len() as f64
}
