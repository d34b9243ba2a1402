use rayon::prelude::*;

use super::split::scan_sorted;
use super::GbtError;

/// Tree node in preorder layout. A split's left child is the next node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split { feature: usize, threshold: f64, right: usize },
    Leaf { value: f64 },
}

/// Regression tree stored as a preorder node list.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Builds a tree from preorder nodes; `right` indices are recomputed.
    pub fn from_preorder(mut nodes: Vec<Node>, width: usize) -> Result<Self, GbtError> {
        fn link(nodes: &mut [Node], at: usize, width: usize) -> Result<usize, GbtError> {
            match nodes.get(at).copied() {
                None => Err(GbtError::Tree(format!("node list ends before node {at}"))),
                Some(Node::Leaf { value }) => {
                    if !value.is_finite() {
                        return Err(GbtError::Tree(format!("leaf {at} is not finite")));
                    }
                    Ok(at + 1)
                }
                Some(Node::Split { feature, threshold, .. }) => {
                    if feature >= width {
                        return Err(GbtError::Tree(format!("node {at} splits feature {feature} of {width}")));
                    }
                    if !threshold.is_finite() {
                        return Err(GbtError::Tree(format!("node {at} has a non-finite threshold")));
                    }
                    let right = link(nodes, at + 1, width)?;
                    nodes[at] = Node::Split { feature, threshold, right };
                    link(nodes, right, width)
                }
            }
        }
        let end = link(&mut nodes, 0, width)?;
        if end != nodes.len() {
            return Err(GbtError::Tree(format!("{} trailing nodes", nodes.len() - end)));
        }
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, right } => at = if x[feature] < threshold { at + 1 } else { right },
            }
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.nodes[..], [Node::Leaf { .. }])
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

/// Grows one tree on the rows listed in `sorted_by_feature` (one list per
/// feature, each sorted by that feature's value).
pub(crate) fn grow(columns: &[Vec<f64>], residuals: &[f64], sorted_by_feature: Vec<Vec<usize>>, params: &TreeParams) -> Tree {
    let mut nodes = Vec::new();
    let mut goes_left = vec![false; residuals.len()];
    grow_node(columns, residuals, sorted_by_feature, 0, params, &mut nodes, &mut goes_left);
    Tree { nodes }
}

fn grow_node(
    columns: &[Vec<f64>],
    residuals: &[f64],
    sorted: Vec<Vec<usize>>,
    depth: usize,
    params: &TreeParams,
    nodes: &mut Vec<Node>,
    goes_left: &mut [bool],
) {
    let rows = &sorted[0];
    let n = rows.len();
    let leaf = Node::Leaf { value: rows.iter().map(|&r| residuals[r]).sum::<f64>() / n as f64 };
    if depth >= params.max_depth || n < 2 * params.min_samples_leaf {
        nodes.push(leaf);
        return;
    }

    // Per-feature search in parallel; the reduction runs in feature order so
    // ties resolve to the lowest feature index, then the lowest threshold.
    let candidates: Vec<_> = sorted
        .par_iter()
        .enumerate()
        .map(|(f, order)| scan_sorted(order, &columns[f], residuals, params.min_samples_leaf))
        .collect();
    let mut best: Option<(usize, f64, f64)> = None;
    for (f, c) in candidates.into_iter().enumerate() {
        if let Some(c) = c {
            if c.gain > 0.0 && best.is_none_or(|(_, _, g)| c.gain > g) {
                best = Some((f, c.threshold, c.gain));
            }
        }
    }
    let Some((feature, threshold, _)) = best else {
        nodes.push(leaf);
        return;
    };

    for &r in rows {
        goes_left[r] = columns[feature][r] < threshold;
    }
    let (left, right): (Vec<Vec<usize>>, Vec<Vec<usize>>) =
        sorted.into_iter().map(|order| order.into_iter().partition(|&r| goes_left[r])).unzip();

    let at = nodes.len();
    nodes.push(Node::Split { feature, threshold, right: 0 });
    grow_node(columns, residuals, left, depth + 1, params, nodes, goes_left);
    let right_at = nodes.len();
    nodes[at] = Node::Split { feature, threshold, right: right_at };
    grow_node(columns, residuals, right, depth + 1, params, nodes, goes_left);
}
