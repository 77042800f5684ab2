//! Metrics, resampling, splits, regularisation sweeps, timing and reports.
//!
//! The positive class is `+1` (defect) throughout.

mod report;
mod sampling;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::{check_labels, Error, Label, Result};

pub use report::{emit_report, parse_csv, render_csv, render_markdown, ReportFormat};
pub use sampling::{random_under_sample, rus_indices, stratified_split, Split};
pub use sweep::{sweep_regularization, time_inference, InferenceTiming, SweepSetup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<Confusion> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    check_labels(y_true)?;
    check_labels(y_pred)?;
    let mut c = Confusion::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (-1, 1) => c.fp += 1,
            (1, -1) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `TP / (TP + FP)`, `None` when nothing was predicted positive.
pub fn precision(c: &Confusion) -> Option<f64> {
    ratio(c.tp, c.tp + c.fp)
}

/// `TP / (TP + FN)`, `None` without positive samples.
pub fn recall(c: &Confusion) -> Option<f64> {
    ratio(c.tp, c.tp + c.fn_)
}

/// Harmonic mean of precision and recall.
pub fn f1_score(p: f64, r: f64) -> Option<f64> {
    (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
}

pub fn f1(c: &Confusion) -> Option<f64> {
    f1_score(precision(c)?, recall(c)?)
}

/// One line of a benchmark table. `None` fields are undefined or not
/// applicable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub selected: Option<usize>,
    pub initial: Option<usize>,
    pub lambda: Option<f64>,
    pub depth: Option<usize>,
    pub train_s: Option<f64>,
    pub infer_ms: Option<f64>,
}

impl MetricRow {
    pub fn from_confusion(model: impl Into<String>, c: &Confusion) -> Self {
        Self {
            model: model.into(),
            precision: precision(c),
            recall: recall(c),
            f1: f1(c),
            ..Self::default()
        }
    }

    pub fn evaluate(model: impl Into<String>, y_true: &[Label], y_pred: &[Label]) -> Result<Self> {
        Ok(Self::from_confusion(model, &confusion(y_true, y_pred)?))
    }
}

/// Least-squares line `y = slope * x + intercept` and its R².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Shape(format!(
            "linear fit needs two or more paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("linear fit over a single x value".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}
