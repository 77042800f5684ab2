//! Weighted CART decision trees used as weak learners.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{check_labels, Error, FeatureMatrix, Label, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        label: Label,
    },
}

/// Binary classification tree; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub max_depth: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini(pos: f64, neg: f64) -> f64 {
    let total = pos + neg;
    if total <= 0.0 {
        return 0.0;
    }
    let (p, q) = (pos / total, neg / total);
    1.0 - p * p - q * q
}

fn leaf_label(pos: f64, neg: f64) -> Label {
    if pos >= neg {
        1
    } else {
        -1
    }
}

struct Fitter<'a> {
    x: &'a FeatureMatrix,
    y: &'a [Label],
    w: &'a [f64],
    max_depth: usize,
    nodes: Vec<Node>,
}

impl Fitter<'_> {
    fn class_mass(&self, idx: &[usize]) -> (f64, f64) {
        idx.iter().fold((0.0, 0.0), |(p, n), &i| {
            if self.y[i] == 1 {
                (p + self.w[i], n)
            } else {
                (p, n + self.w[i])
            }
        })
    }

    /// Best split of one feature: lowest weighted Gini, lowest threshold on ties.
    fn best_for_feature(&self, idx: &[usize], feature: usize, total: (f64, f64)) -> Option<Candidate> {
        let mut order: Vec<(f64, usize)> = idx.iter().map(|&i| (self.x.get(i, feature), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let weight = total.0 + total.1;
        let (mut lp, mut ln) = (0.0, 0.0);
        let mut best: Option<Candidate> = None;
        for k in 0..order.len() - 1 {
            let i = order[k].1;
            if self.y[i] == 1 {
                lp += self.w[i];
            } else {
                ln += self.w[i];
            }
            let (v, next) = (order[k].0, order[k + 1].0);
            if v == next {
                continue;
            }
            let (rp, rn) = (total.0 - lp, total.1 - ln);
            let impurity = ((lp + ln) * gini(lp, ln) + (rp + rn) * gini(rp, rn)) / weight;
            if best.is_none_or(|b| impurity < b.impurity) {
                best = Some(Candidate {
                    feature,
                    threshold: v + (next - v) / 2.0,
                    impurity,
                });
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let (pos, neg) = self.class_mass(&idx);
        self.nodes.push(Node::Leaf {
            label: leaf_label(pos, neg),
        });
        let pure = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
        if depth >= self.max_depth || pure || pos + neg <= 0.0 {
            return id;
        }

        let parent = gini(pos, neg);
        let best = (0..self.x.cols())
            .into_par_iter()
            .filter_map(|f| self.best_for_feature(&idx, f, (pos, neg)))
            // deterministic reduction: lowest impurity, then lowest feature index
            .reduce_with(|a, b| {
                if b.impurity < a.impurity || (b.impurity == a.impurity && b.feature < a.feature) {
                    b
                } else {
                    a
                }
            });
        let Some(best) = best else {
            return id;
        };
        if best.impurity >= parent {
            return id;
        }

        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.x.get(i, best.feature) <= best.threshold);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        id
    }
}

/// Greedy weighted-Gini CART. `weights` must be non-negative and sum to 1.
/// Leaves predict the sign of their weighted label sum, `+1` on ties.
pub fn tree_fit(
    x: &FeatureMatrix,
    y: &[Label],
    weights: &[f64],
    max_depth: usize,
) -> Result<DecisionTree> {
    if x.rows() == 0 {
        return Err(Error::Shape("cannot fit a tree on zero samples".into()));
    }
    if y.len() != x.rows() || weights.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} rows, {} labels, {} weights",
            x.rows(),
            y.len(),
            weights.len()
        )));
    }
    check_labels(y)?;
    if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
        return Err(Error::Weight("weights must be finite and non-negative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Weight(format!("weights sum to {sum}, expected 1")));
    }

    let mut fitter = Fitter {
        x,
        y,
        w: weights,
        max_depth,
        nodes: Vec::new(),
    };
    fitter.grow((0..x.rows()).collect(), 0);
    Ok(DecisionTree {
        nodes: fitter.nodes,
        max_depth,
    })
}

impl DecisionTree {
    /// A tree that always predicts `label`.
    pub fn constant(label: Label) -> Self {
        Self {
            nodes: vec![Node::Leaf { label }],
            max_depth: 0,
        }
    }

    /// Goes left iff `x[feature] <= threshold`.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { label } => return Ok(label),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let v = x.get(feature).ok_or_else(|| {
                        Error::Shape(format!(
                            "tree tests feature {feature} but the row has {} features",
                            x.len()
                        ))
                    })?;
                    id = if *v <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<Label>> {
        x.row_iter().map(|r| self.predict(r)).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }
}

pub fn tree_predict(tree: &DecisionTree, x: &[f64]) -> Result<Label> {
    tree.predict(x)
}
