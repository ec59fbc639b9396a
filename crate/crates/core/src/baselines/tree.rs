use serde::{Deserialize, Serialize};

use super::FlatDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or `min_leaf` stops the split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { max_depth: None, min_leaf: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Reduction in summed squared error relative to the parent.
    pub gain: f64,
}

/// Best variance-reduction split of `rows` over `features` (visited in the
/// given order). Thresholds are midpoints between consecutive distinct
/// values; a candidate must beat the incumbent by more than a relative 1e-10
/// of the parent's squared error, so near-ties keep the earlier feature and
/// the lower threshold.
pub fn best_split(data: &FlatDataset, rows: &[usize], features: &[usize], min_leaf: usize) -> Option<SplitCandidate> {
    let n = rows.len();
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let y = data.y();
    let total: f64 = rows.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = rows.iter().map(|&i| y[i] * y[i]).sum();
    let parent_sse = (total_sq - total * total / n as f64).max(0.0);
    let tol = 1e-10 * parent_sse;
    let mut best: Option<SplitCandidate> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &f in features {
        sorted.clear();
        sorted.extend(rows.iter().map(|&i| (data.row(i)[f], i)));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (mut left_sum, mut left_sq) = (0.0, 0.0);
        for pos in 1..n {
            let yi = y[sorted[pos - 1].1];
            left_sum += yi;
            left_sq += yi * yi;
            let (lo, hi) = (sorted[pos - 1].0, sorted[pos].0);
            if lo == hi || pos < min_leaf || n - pos < min_leaf {
                continue;
            }
            let nl = pos as f64;
            let nr = (n - pos) as f64;
            let right_sum = total - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / nl).max(0.0) + (right_sq - right_sum * right_sum / nr).max(0.0);
            let gain = parent_sse - sse;
            if best.is_none_or(|b| gain > b.gain + tol) {
                let mut threshold = 0.5 * (lo + hi);
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(SplitCandidate { feature: f, threshold, gain });
            }
        }
    }
    best
}

pub(crate) struct Grower<'a, F: FnMut() -> Vec<usize>> {
    pub data: &'a FlatDataset,
    pub cfg: TreeConfig,
    pub pick_features: F,
    pub nodes: Vec<Node>,
}

impl<F: FnMut() -> Vec<usize>> Grower<'_, F> {
    pub fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let y = self.data.y();
        let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf { value: mean });
        let pure = rows.iter().all(|&i| y[i] == y[rows[0]]);
        if pure || self.cfg.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let features = (self.pick_features)();
        let Some(split) = best_split(self.data, &rows, &features, self.cfg.min_leaf) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.data.row(i)[split.feature] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }
}

/// Greedy CART regression tree on all rows and all features.
pub fn tree_fit(data: &FlatDataset, cfg: &TreeConfig) -> super::FittedBaseline {
    let all: Vec<usize> = (0..data.d()).collect();
    let mut g = Grower { data, cfg: *cfg, pick_features: || all.clone(), nodes: Vec::new() };
    g.grow((0..data.n()).collect(), 0);
    super::FittedBaseline::Tree { tree: RegressionTree { n_features: data.d(), nodes: g.nodes }, config: *cfg }
}
