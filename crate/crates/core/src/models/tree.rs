//! CART regression trees grown best-first.
//!
//! The open leaf with the largest weighted SSE reduction is split next, until
//! the leaf budget is spent or no leaf can be split (depth limit, minimum leaf
//! size, or no reduction). Thresholds sit at midpoints between consecutive
//! distinct feature values; rows with `x <= threshold` go left. Ties prefer the
//! lower feature index, then the lower threshold.

use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub max_leaf_nodes: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

/// A candidate split of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// SSE(parent) - SSE(left) - SSE(right).
    pub gain: f64,
}

impl RegressionTree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    k = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Structural validation for trees that did not come from [`tree_fit`]:
    /// children always follow their parent, so traversal terminates.
    pub fn check(&self, n_features: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        for (k, node) in self.nodes.iter().enumerate() {
            if let Node::Split { feature, left, right, .. } = *node {
                if feature >= n_features {
                    return Err(format!("node {k}: feature {feature} out of range"));
                }
                if left <= k || right <= k || left >= self.nodes.len() || right >= self.nodes.len() {
                    return Err(format!("node {k}: bad child index"));
                }
            }
        }
        Ok(())
    }

    /// Index of the leaf `x` falls into.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut k = 0;
        while let Node::Split { feature, threshold, left, right } = self.nodes[k] {
            k = if x[feature] <= threshold { left } else { right };
        }
        k
    }
}

fn mean(y: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b { a } else { m }
}

/// Best split of `rows`, or `None` when no split reduces the SSE.
pub fn best_split(x: &Matrix, y: &[f64], rows: &[usize], min_samples_leaf: usize) -> Option<SplitChoice> {
    let n = rows.len();
    let min_leaf = min_samples_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let first = y[rows[0]];
    if rows.iter().all(|&r| y[r] == first) {
        return None;
    }
    let m = mean(y, rows);
    let centered_sse: f64 = rows.iter().map(|&r| (y[r] - m) * (y[r] - m)).sum();
    let total: f64 = rows.iter().map(|&r| y[r] - m).sum();
    let mut best: Option<SplitChoice> = None;
    let mut order: Vec<usize> = rows.to_vec();
    for f in 0..x.cols() {
        order.copy_from_slice(rows);
        order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
        let mut left_sum = 0.0;
        for p in 1..n {
            left_sum += y[order[p - 1]] - m;
            if p < min_leaf || n - p < min_leaf {
                continue;
            }
            let (lo, hi) = (x.get(order[p - 1], f), x.get(order[p], f));
            if lo == hi {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / p as f64 + right_sum * right_sum / (n - p) as f64
                - total * total / n as f64;
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(SplitChoice { feature: f, threshold: midpoint(lo, hi), gain });
            }
        }
    }
    // reductions at rounding level are not splits
    best.filter(|b| b.gain > 1e-12 * centered_sse && b.gain > 0.0)
}

struct Open {
    node: usize,
    depth: usize,
    rows: Vec<usize>,
    split: Option<SplitChoice>,
}

/// Fits a tree on the multiset `rows` of training indices (duplicates allowed).
pub fn tree_fit(x: &Matrix, y: &[f64], rows: &[usize], params: &TreeParams) -> RegressionTree {
    assert!(!rows.is_empty(), "tree_fit needs at least one row");
    let max_leaves = params.max_leaf_nodes.max(1);
    let candidate = |rows: &[usize], depth: usize| {
        if depth < params.max_depth {
            best_split(x, y, rows, params.min_samples_leaf)
        } else {
            None
        }
    };
    let mut nodes = vec![Node::Leaf { value: mean(y, rows) }];
    let mut open = vec![Open { node: 0, depth: 0, rows: rows.to_vec(), split: candidate(rows, 0) }];
    let mut leaves = 1;
    while leaves < max_leaves {
        // highest gain; earliest-created node on ties
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(k, o)| o.split.as_ref().map(|s| (k, s.gain, o.node)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)))
            .map(|(k, _, _)| k);
        let Some(k) = pick else { break };
        let o = open.swap_remove(k);
        let s = o.split.expect("picked nodes have a split");
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            o.rows.iter().partition(|&&r| x.get(r, s.feature) <= s.threshold);
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { value: mean(y, &left_rows) });
        nodes.push(Node::Leaf { value: mean(y, &right_rows) });
        nodes[o.node] = Node::Split { feature: s.feature, threshold: s.threshold, left: l, right: r };
        leaves += 1;
        let d = o.depth + 1;
        let ls = candidate(&left_rows, d);
        let rs = candidate(&right_rows, d);
        open.push(Open { node: l, depth: d, rows: left_rows, split: ls });
        open.push(Open { node: r, depth: d, rows: right_rows, split: rs });
    }
    RegressionTree { nodes }
}
