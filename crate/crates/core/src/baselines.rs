//! Classical reference classifiers: linear SVM, RBF-kernel SVM and AdaBoost.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::qboost::train_weak_ensemble;
use crate::qkernel::{svm_train_precomputed, KernelGram, QsvmModel, SmoParams};
use crate::trees::DecisionTree;
use crate::{require_both_classes, sign_label, Classifier, Error, FeatureMatrix, Label, Result};

fn check_rows(x: &FeatureMatrix, y: &[Label]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    require_both_classes(y)
}

fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearSvmParams {
    pub c: f64,
    pub epochs: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LinearSvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 1000,
            tol: 1e-4,
            seed: 0,
        }
    }
}

/// `sign(w . x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub epochs_run: usize,
}

/// Dual coordinate descent for the hinge-loss SVM. The bias is learned as the
/// weight of an appended constant feature.
pub fn linear_svm_fit(x: &FeatureMatrix, y: &[Label], params: &LinearSvmParams) -> Result<LinearSvmModel> {
    check_rows(x, y)?;
    if !(params.c > 0.0) || params.epochs == 0 || !(params.tol > 0.0) {
        return Err(Error::Config("linear SVM needs C > 0, epochs >= 1 and tol > 0".into()));
    }
    let (s, d) = (x.rows(), x.cols());
    let qdiag: Vec<f64> = x.row_iter().map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0).collect();
    let mut alpha = vec![0.0; s];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..s).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut epochs_run = 0;

    for _ in 0..params.epochs {
        epochs_run += 1;
        order.shuffle(&mut rng);
        let mut max_change: f64 = 0.0;
        for &i in &order {
            let row = x.row(i);
            let yi = f64::from(y[i]);
            let g = yi * (row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == params.c {
                g.max(0.0)
            } else {
                g
            };
            if pg == 0.0 {
                continue;
            }
            let next = (alpha[i] - g / qdiag[i]).clamp(0.0, params.c);
            let delta = next - alpha[i];
            if delta != 0.0 {
                alpha[i] = next;
                for (wj, xj) in w.iter_mut().zip(row) {
                    *wj += delta * yi * xj;
                }
                b += delta * yi;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < params.tol {
            break;
        }
    }
    Ok(LinearSvmModel {
        weights: w,
        bias: b,
        c: params.c,
        epochs_run,
    })
}

impl LinearSvmModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::Shape(format!(
                "row has {} features, model expects {}",
                x.len(),
                self.weights.len()
            )));
        }
        Ok(x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        self.decision(x).map(sign_label)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_json(path)
    }
}

impl Classifier for LinearSvmModel {
    fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<Label>> {
        x.row_iter().map(|r| self.predict(r)).collect()
    }
}

/// RBF width: a fixed value or `1 / (n_features * var(X))`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    #[default]
    Scale,
    Value(f64),
}

impl Gamma {
    pub fn resolve(&self, x: &FeatureMatrix) -> Result<f64> {
        match *self {
            Gamma::Value(g) if g > 0.0 && g.is_finite() => Ok(g),
            Gamma::Value(g) => Err(Error::Config(format!("gamma {g} must be positive"))),
            Gamma::Scale => {
                let var = x.total_variance();
                if !(var > 0.0) || x.cols() == 0 {
                    return Err(Error::Train("gamma 'scale' needs data with nonzero variance".into()));
                }
                Ok(1.0 / (x.cols() as f64 * var))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbfSvmParams {
    pub c: f64,
    pub gamma: Gamma,
    pub tol: f64,
}

impl Default for RbfSvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
        }
    }
}

/// `exp(-gamma ||a - b||^2)`.
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

pub fn rbf_gram(x: &FeatureMatrix, gamma: f64) -> KernelGram {
    KernelGram::symmetric_from_fn(x.rows(), |i, j| {
        if i == j {
            1.0
        } else {
            rbf_kernel(x.row(i), x.row(j), gamma)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfSvmModel {
    /// `alpha_s * y_s` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub support_vectors: FeatureMatrix,
    pub gamma: f64,
    pub c: f64,
}

pub fn rbf_svm_fit(x: &FeatureMatrix, y: &[Label], params: &RbfSvmParams) -> Result<RbfSvmModel> {
    check_rows(x, y)?;
    let (c, tol) = (params.c, params.tol);
    let gamma = params.gamma.resolve(x)?;
    let k = rbf_gram(x, gamma);
    let svm = svm_train_precomputed(
        &k,
        y,
        &SmoParams {
            c,
            tol,
            ..SmoParams::default()
        },
    )?;
    Ok(RbfSvmModel {
        dual_coef: svm.support.iter().map(|&s| svm.dual_coef[s]).collect(),
        bias: svm.bias,
        support_vectors: x.select_rows(&svm.support),
        gamma,
        c,
    })
}

impl RbfSvmModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.support_vectors.cols() {
            return Err(Error::Shape(format!(
                "row has {} features, model expects {}",
                x.len(),
                self.support_vectors.cols()
            )));
        }
        Ok(self
            .support_vectors
            .row_iter()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * rbf_kernel(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        self.decision(x).map(sign_label)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_json(path)
    }
}

impl Classifier for RbfSvmModel {
    fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<Label>> {
        x.row_iter().map(|r| self.predict(r)).collect()
    }
}

/// `sign(sum_i w_i h_i(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub trees: Vec<DecisionTree>,
    pub stage_weights: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Shares the boosting loop with the QBoost weak ensemble.
pub fn adaboost_fit(x: &FeatureMatrix, y: &[Label], n_estimators: usize, depth: usize) -> Result<AdaBoostModel> {
    check_rows(x, y)?;
    let e = train_weak_ensemble(x, y, n_estimators, depth)?;
    Ok(AdaBoostModel {
        trees: e.trees,
        stage_weights: e.stage_weights,
        errors: e.errors,
    })
}

impl AdaBoostModel {
    pub fn stages(&self) -> usize {
        self.trees.len()
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (t, w) in self.trees.iter().zip(&self.stage_weights) {
            total += w * f64::from(t.predict(x)?);
        }
        Ok(total)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        self.decision(x).map(sign_label)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_json(path)
    }
}

impl Classifier for AdaBoostModel {
    fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<Label>> {
        x.row_iter().map(|r| self.predict(r)).collect()
    }
}

impl Classifier for QsvmModel {
    fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<Label>> {
        self.predict(x)
    }
}

impl Classifier for crate::qboost::QBoostModel {
    fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<Label>> {
        crate::qboost::QBoostModel::predict_all(self, x)
    }
}
