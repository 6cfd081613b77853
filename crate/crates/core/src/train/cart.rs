//! Greedy binary trees split by information gain (entropy).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CartNode {
    Leaf {
        probability: f64,
        n: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        n: usize,
        /// Rows with `x[feature] <= threshold`.
        left: Box<CartNode>,
        right: Box<CartNode>,
    },
}

impl CartNode {
    fn depth(&self) -> usize {
        match self {
            CartNode::Leaf { .. } => 0,
            CartNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves(&self) -> Vec<(f64, usize)> {
        match self {
            CartNode::Leaf { probability, n } => vec![(*probability, *n)],
            CartNode::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartModel {
    pub feature_names: Vec<String>,
    pub max_depth: usize,
    pub root: CartNode,
}

impl CartModel {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// `(positive fraction, rows)` for every leaf, left to right.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        self.root.leaves()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                CartNode::Leaf { probability, .. } => return *probability,
                CartNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>> {
        let idx = self
            .feature_names
            .iter()
            .map(|f| {
                data.column_index(f)
                    .ok_or_else(|| Error::Schema(format!("missing feature `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(data
            .x
            .rows()
            .into_iter()
            .map(|r| {
                let row: Vec<f64> = idx.iter().map(|&j| r[j]).collect();
                self.predict_row(&row)
            })
            .collect())
    }

    /// Indented text dump.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_node(&self.root, 0, &mut out);
        out
    }

    fn dump_node(&self, node: &CartNode, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match node {
            CartNode::Leaf { probability, n } => {
                let _ = writeln!(out, "{pad}leaf p={probability:.4} n={n}");
            }
            CartNode::Split {
                feature,
                threshold,
                n,
                left,
                right,
            } => {
                let name = &self.feature_names[*feature];
                let _ = writeln!(out, "{pad}{name} <= {threshold} (n={n})");
                self.dump_node(left, depth + 1, out);
                let _ = writeln!(out, "{pad}{name} > {threshold}");
                self.dump_node(right, depth + 1, out);
            }
        }
    }
}

fn entropy(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    [pos / n, 1.0 - pos / n]
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

struct Builder<'a> {
    data: &'a Dataset,
    max_depth: usize,
    min_impurity_decrease: f64,
    total: f64,
}

impl Builder<'_> {
    /// Best `(gain, feature, threshold)`; ties keep the lowest feature, then the smallest threshold.
    fn best_split(&self, rows: &[usize]) -> Option<(f64, usize, f64)> {
        let n = rows.len() as f64;
        let pos = rows.iter().filter(|&&i| self.data.y[i]).count() as f64;
        let parent = entropy(pos, n);
        let mut best: Option<(f64, usize, f64)> = None;
        for j in 0..self.data.n_cols() {
            let mut sorted: Vec<(f64, bool)> = rows.iter().map(|&i| (self.data.x[[i, j]], self.data.y[i])).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0.0;
            for k in 0..sorted.len() - 1 {
                if sorted[k].1 {
                    left_pos += 1.0;
                }
                if sorted[k].0 == sorted[k + 1].0 {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let child = (nl * entropy(left_pos, nl) + nr * entropy(pos - left_pos, nr)) / n;
                let gain = parent - child;
                let threshold = 0.5 * (sorted[k].0 + sorted[k + 1].0);
                if best.map_or(true, |(g, _, _)| gain > g + 1e-12) {
                    best = Some((gain, j, threshold));
                }
            }
        }
        best
    }

    fn grow(&self, rows: &[usize], depth: usize) -> CartNode {
        let n = rows.len();
        let pos = rows.iter().filter(|&&i| self.data.y[i]).count();
        let leaf = CartNode::Leaf {
            probability: pos as f64 / n as f64,
            n,
        };
        if depth >= self.max_depth || pos == 0 || pos == n {
            return leaf;
        }
        let Some((gain, feature, threshold)) = self.best_split(rows) else {
            return leaf;
        };
        // Weighted by the node's share of rows, as in common CART implementations.
        if (n as f64 / self.total) * gain < self.min_impurity_decrease {
            return leaf;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.data.x[[i, feature]] <= threshold);
        CartNode::Split {
            feature,
            threshold,
            n,
            left: Box::new(self.grow(&l, depth + 1)),
            right: Box::new(self.grow(&r, depth + 1)),
        }
    }
}

pub fn fit_cart(data: &Dataset, max_depth: usize, min_impurity_decrease: f64) -> Result<CartModel> {
    if data.n_rows() == 0 {
        return Err(Error::Validation("cannot grow a tree on empty data".into()));
    }
    if max_depth == 0 {
        return Err(Error::Config("max depth must be at least 1".into()));
    }
    if data.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("tree input".into()));
    }
    let builder = Builder {
        data,
        max_depth,
        min_impurity_decrease,
        total: data.n_rows() as f64,
    };
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    Ok(CartModel {
        feature_names: data.feature_names.clone(),
        max_depth,
        root: builder.grow(&rows, 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pure_labels_give_one_leaf() {
        let d = Dataset::new(vec!["a".into()], array![[1.0], [2.0]], vec![true, true]).unwrap();
        let m = fit_cart(&d, 5, 0.0).unwrap();
        assert_eq!(m.root, CartNode::Leaf { probability: 1.0, n: 2 });
    }

    #[test]
    fn recovers_threshold() {
        let d = Dataset::new(
            vec!["a".into()],
            array![[1.0], [2.0], [3.0], [7.0], [8.0]],
            vec![false, false, false, true, true],
        )
        .unwrap();
        let m = fit_cart(&d, 3, 0.0).unwrap();
        assert_eq!(m.depth(), 1);
        match &m.root {
            CartNode::Split { threshold, .. } => assert_eq!(*threshold, 5.0),
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn xor_needs_depth_two() {
        let d = Dataset::new(
            vec!["a".into(), "b".into()],
            array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]],
            vec![false, true, true, false],
        )
        .unwrap();
        let m = fit_cart(&d, 2, 0.0).unwrap();
        let leaves = m.leaves();
        assert_eq!(leaves.len(), 4);
        assert!(leaves.iter().all(|(p, _)| *p == 0.0 || *p == 1.0));
        assert!(m.dump().starts_with("a <= 0.5 (n=4)\n  b <= 0.5"));
    }

    #[test]
    fn empty_data_is_rejected() {
        let d = Dataset::new(vec!["a".into()], ndarray::Array2::zeros((0, 1)), vec![]).unwrap();
        assert!(fit_cart(&d, 2, 0.0).is_err());
    }
}
