use serde::{Deserialize, Serialize};

use crate::{Error, FeatureMatrix, Result};

/// Zero-variance guard used by [`standardize_fit`].
pub const STD_EPSILON: f64 = 1e-12;

/// Per-feature mean and (population) standard deviation fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerModel {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub epsilon: f64,
}

pub fn standardize_fit(train: &FeatureMatrix) -> Result<StandardizerModel> {
    if train.rows() == 0 {
        return Err(Error::Shape("cannot fit a standardizer on zero rows".into()));
    }
    let n = train.rows() as f64;
    let cols = train.cols();
    let mut mean = vec![0.0; cols];
    for row in train.row_iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut var = vec![0.0; cols];
    for row in train.row_iter() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd < STD_EPSILON {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(StandardizerModel {
        mean,
        std,
        epsilon: STD_EPSILON,
    })
}

pub fn standardize_apply(model: &StandardizerModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    x.expect_cols(model.mean.len(), "standardize_apply")?;
    let mut out = x.clone();
    for r in 0..out.rows() {
        for ((v, m), s) in out.row_mut(r).iter_mut().zip(&model.mean).zip(&model.std) {
            *v = (*v - m) / s;
        }
    }
    Ok(out)
}

/// Per-feature affine map of the fitted `[min, max]` range onto `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxModel {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl MinMaxModel {
    pub fn fit(x: &FeatureMatrix, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!(
                "min-max target range [{lo}, {hi}] requires hi > lo"
            )));
        }
        let mut min = vec![f64::INFINITY; x.cols()];
        let mut max = vec![f64::NEG_INFINITY; x.cols()];
        for row in x.row_iter() {
            for ((lo_c, hi_c), &v) in min.iter_mut().zip(max.iter_mut()).zip(row) {
                *lo_c = lo_c.min(v);
                *hi_c = hi_c.max(v);
            }
        }
        Ok(Self { min, max, lo, hi })
    }

    /// Rows outside the fitted range map outside `[lo, hi]`; nothing is clamped.
    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        x.expect_cols(self.min.len(), "minmax apply")?;
        let mut out = x.clone();
        let span = self.hi - self.lo;
        for r in 0..out.rows() {
            for ((v, &mn), &mx) in out.row_mut(r).iter_mut().zip(&self.min).zip(&self.max) {
                let range = mx - mn;
                *v = if range > 0.0 {
                    self.lo + (*v - mn) * span / range
                } else {
                    self.lo
                };
            }
        }
        Ok(out)
    }
}

/// Fits and applies a [`MinMaxModel`] on the same matrix.
pub fn minmax_scale(x: &FeatureMatrix, lo: f64, hi: f64) -> Result<FeatureMatrix> {
    MinMaxModel::fit(x, lo, hi)?.apply(x)
}
