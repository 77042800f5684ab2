use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{confusion, f1, precision, recall, MetricRow};
use crate::qboost::{QBoostModel, QuboMode, Solver, ThresholdMode, WeakEnsemble};
use crate::{Classifier, Error, FeatureMatrix, Label, Result};

/// Everything a regularisation sweep holds fixed.
pub struct SweepSetup<'a> {
    pub ensemble: &'a WeakEnsemble,
    pub y_train: &'a [Label],
    pub x_test: &'a FeatureMatrix,
    pub y_test: &'a [Label],
    pub depth: usize,
    pub mode: QuboMode,
    pub threshold: ThresholdMode,
    pub solver: &'a Solver,
}

impl SweepSetup<'_> {
    /// Selection, thresholding and test evaluation at one `lambda`.
    fn row(&self, lambda: f64) -> Result<MetricRow> {
        let initial = self.ensemble.len();
        let base = MetricRow {
            selected: Some(0),
            initial: Some(initial),
            lambda: Some(lambda),
            depth: Some(self.depth),
            ..MetricRow::default()
        };
        let model = match QBoostModel::from_ensemble(
            self.ensemble,
            self.y_train,
            self.depth,
            lambda,
            self.mode,
            self.threshold,
            self.solver,
        ) {
            Ok(m) => m,
            Err(Error::DegenerateModel(_)) => {
                return Ok(MetricRow {
                    model: format!("QBoost (0/{initial} trees, {})", self.solver.name()),
                    ..base
                })
            }
            Err(e) => return Err(e),
        };
        let c = confusion(self.y_test, &model.predict_all(self.x_test)?)?;
        Ok(MetricRow {
            model: format!("QBoost ({}/{initial} trees, {})", model.selected(), self.solver.name()),
            precision: precision(&c),
            recall: recall(&c),
            f1: f1(&c),
            selected: Some(model.selected()),
            ..base
        })
    }
}

/// One row per `lambda`, in grid order. The weak ensemble is reused; an empty
/// selection yields a row with undefined metrics.
pub fn sweep_regularization(setup: &SweepSetup<'_>, lambdas: &[f64]) -> Result<Vec<MetricRow>> {
    if lambdas.is_empty() {
        return Err(Error::Config("regularisation grid is empty".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !l.is_finite()) {
        return Err(Error::Config(format!("lambda {l} is not finite")));
    }
    lambdas.par_iter().map(|&l| setup.row(l)).collect()
}

/// Median wall-clock time of predicting a whole test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceTiming {
    pub total_s: f64,
    pub per_image_ms: f64,
}

pub fn time_inference<C: Classifier + ?Sized>(model: &C, x: &FeatureMatrix, repetitions: usize) -> Result<InferenceTiming> {
    if repetitions == 0 {
        return Err(Error::Config("timing needs at least one repetition".into()));
    }
    if x.rows() == 0 {
        return Err(Error::Shape("timing needs at least one test row".into()));
    }
    let mut times = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        let pred = model.predict_all(x)?;
        std::hint::black_box(pred);
        times.push(start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE));
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    let total_s = if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2.0
    };
    Ok(InferenceTiming {
        total_s,
        per_image_ms: total_s * 1e3 / x.rows() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qboost::{train_weak_ensemble, QBoostConfig};

    fn data() -> (FeatureMatrix, Vec<Label>) {
        let rows: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = i as f64;
                [(t * 0.37).sin() * 3.0, (t * 0.91).cos() * 2.0 + t / 20.0]
            })
            .collect();
        let y = rows
            .iter()
            .map(|r| if r[0] + 0.5 * r[1] > 0.3 { 1 } else { -1 })
            .collect();
        (FeatureMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn sweep_counts_never_increase() {
        let (x, y) = data();
        let e = train_weak_ensemble(&x, &y, 8, 2).unwrap();
        let setup = SweepSetup {
            ensemble: &e,
            y_train: &y,
            x_test: &x,
            y_test: &y,
            depth: 2,
            mode: QuboMode::Consistent,
            threshold: ThresholdMode::Sweep,
            solver: &Solver::Exhaustive,
        };
        let grid: Vec<f64> = (0..30).map(|i| f64::from(i) * 0.5).collect();
        let rows = sweep_regularization(&setup, &grid).unwrap();
        let counts: Vec<usize> = rows.iter().map(|r| r.selected.unwrap()).collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
        assert_eq!(*counts.last().unwrap(), 0);
        assert!(rows.last().unwrap().f1.is_none());
        assert!(matches!(sweep_regularization(&setup, &[]), Err(Error::Config(_))));
    }

    #[test]
    fn single_lambda_equals_direct_run() {
        let (x, y) = data();
        let config = QBoostConfig {
            n_trees: 6,
            depth: 2,
            lambda: 0.05,
            ..QBoostConfig::default()
        };
        let direct = QBoostModel::fit(&x, &y, &config).unwrap();
        let e = train_weak_ensemble(&x, &y, 6, 2).unwrap();
        let setup = SweepSetup {
            ensemble: &e,
            y_train: &y,
            x_test: &x,
            y_test: &y,
            depth: 2,
            mode: config.mode,
            threshold: config.threshold,
            solver: &config.solver,
        };
        let row = &sweep_regularization(&setup, &[0.05]).unwrap()[0];
        let expect = MetricRow::evaluate("", &y, &direct.predict_all(&x).unwrap()).unwrap();
        assert_eq!(row.selected, Some(direct.selected()));
        assert_eq!((row.precision, row.recall, row.f1), (expect.precision, expect.recall, expect.f1));
    }

    #[test]
    fn timing_identity() {
        let (x, y) = data();
        let m = QBoostModel::fit(&x, &y, &QBoostConfig::default()).unwrap();
        let t = time_inference(&m, &x, 5).unwrap();
        assert!(t.total_s > 0.0 && t.per_image_ms > 0.0);
        assert!((t.per_image_ms * x.rows() as f64 - t.total_s * 1e3).abs() < 1e-9);
        assert!(time_inference(&m, &x, 0).is_err());
    }
}
