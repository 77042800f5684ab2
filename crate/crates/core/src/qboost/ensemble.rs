use serde::{Deserialize, Serialize};

use crate::trees::{tree_fit, DecisionTree};
use crate::{require_both_classes, Error, FeatureMatrix, Label, Result};

/// Weak-learner error rates are clamped to `[EPS_CLAMP, 1 - EPS_CLAMP]`.
pub const EPS_CLAMP: f64 = 1e-10;

/// Sequentially boosted trees together with their training outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakEnsemble {
    pub trees: Vec<DecisionTree>,
    /// Boosting stage weights `1/2 ln((1 - eps) / eps)`.
    pub stage_weights: Vec<f64>,
    /// Clamped weighted training errors.
    pub errors: Vec<f64>,
    /// `S x N` matrix of training predictions, row-major.
    pub outputs: Vec<Label>,
    pub samples: usize,
}

impl WeakEnsemble {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Prediction of tree `i` on training sample `s`.
    #[inline]
    pub fn output(&self, s: usize, i: usize) -> Label {
        self.outputs[s * self.trees.len() + i]
    }

    /// Unweighted majority vote of all trees on the training set (`+1` on ties).
    pub fn majority_vote(&self) -> Vec<Label> {
        let n = self.trees.len();
        (0..self.samples)
            .map(|s| {
                let votes: i64 = self.outputs[s * n..(s + 1) * n].iter().map(|&v| i64::from(v)).sum();
                if votes >= 0 {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }
}

/// Weighted error, stage weight and next distribution for one boosting round.
/// Misclassified mass is clamped away from 0 and 1 before taking the log.
pub(crate) fn boost_round(dist: &mut [f64], y: &[Label], pred: &[Label]) -> (f64, f64) {
    let raw: f64 = dist
        .iter()
        .zip(y.iter().zip(pred))
        .filter(|(_, (a, b))| a != b)
        .map(|(d, _)| d)
        .sum();
    let eps = raw.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
    let w = 0.5 * ((1.0 - eps) / eps).ln();
    for (d, (&yi, &hi)) in dist.iter_mut().zip(y.iter().zip(pred)) {
        *d *= (-w * f64::from(yi) * f64::from(hi)).exp();
    }
    let z: f64 = dist.iter().sum();
    dist.iter_mut().for_each(|d| *d /= z);
    (eps, w)
}

/// Trains `n` trees of depth `depth` on successively reweighted data,
/// starting from the uniform distribution.
pub fn train_weak_ensemble(
    x: &FeatureMatrix,
    y: &[Label],
    n: usize,
    depth: usize,
) -> Result<WeakEnsemble> {
    if n == 0 {
        return Err(Error::Config("ensemble needs at least one tree".into()));
    }
    if y.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    require_both_classes(y)?;

    let s = y.len();
    let mut dist = vec![1.0 / s as f64; s];
    let mut trees = Vec::with_capacity(n);
    let mut stage_weights = Vec::with_capacity(n);
    let mut errors = Vec::with_capacity(n);
    let mut columns: Vec<Vec<Label>> = Vec::with_capacity(n);
    for _ in 0..n {
        // renormalise against drift before the strict weight-sum check
        let total: f64 = dist.iter().sum();
        dist.iter_mut().for_each(|d| *d /= total);
        let tree = tree_fit(x, y, &dist, depth)?;
        let pred = tree.predict_all(x)?;
        let (eps, w) = boost_round(&mut dist, y, &pred);
        trees.push(tree);
        stage_weights.push(w);
        errors.push(eps);
        columns.push(pred);
    }

    let mut outputs = Vec::with_capacity(s * n);
    for row in 0..s {
        outputs.extend(columns.iter().map(|c| c[row]));
    }
    Ok(WeakEnsemble {
        trees,
        stage_weights,
        errors,
        outputs,
        samples: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_error_leaves_distribution_unchanged() {
        let mut d = vec![0.25; 4];
        let (eps, w) = boost_round(&mut d, &[1, 1, -1, -1], &[1, -1, -1, 1]);
        assert_eq!(eps, 0.5);
        assert_eq!(w, 0.0);
        assert_eq!(d, vec![0.25; 4]);
    }

    #[test]
    fn quarter_error_weight() {
        let mut d = vec![0.25; 4];
        let (eps, w) = boost_round(&mut d, &[1, 1, -1, -1], &[1, 1, -1, 1]);
        assert_eq!(eps, 0.25);
        assert!((w - 0.5 * 3f64.ln()).abs() < 1e-9);
        assert!((w - 0.549_306_144).abs() < 1e-9);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // misclassified sample now carries half the mass
        assert!((d[3] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perfect_learner_is_clamped() {
        let mut d = vec![0.5; 2];
        let (eps, w) = boost_round(&mut d, &[1, -1], &[1, -1]);
        assert_eq!(eps, EPS_CLAMP);
        assert!(w.is_finite() && w > 10.0);
    }

    #[test]
    fn distributions_stay_normalised() {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]]).unwrap();
        let y = [1, -1, 1, -1, 1, -1];
        let e = train_weak_ensemble(&x, &y, 6, 1).unwrap();
        assert_eq!(e.len(), 6);
        assert_eq!(e.outputs.len(), 36);
        assert!(e.errors.iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(e.outputs.iter().all(|&v| v == 1 || v == -1));
    }

    #[test]
    fn single_class_is_rejected() {
        let x = FeatureMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(matches!(
            train_weak_ensemble(&x, &[1, 1], 2, 1),
            Err(Error::Train(_))
        ));
    }
}
