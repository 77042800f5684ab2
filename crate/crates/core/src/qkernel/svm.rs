//! Soft-margin SVM on a precomputed kernel, solved with SMO.
//!
//! Each iteration picks the maximal-violating pair using second-order
//! information (the libsvm working-set rule) and solves the two-variable
//! subproblem analytically. The dual objective never decreases.

use serde::{Deserialize, Serialize};

use super::gram::KernelGram;
use crate::{require_both_classes, sign_label, Error, Label, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    /// Box constraint `C`.
    pub c: f64,
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// `alpha_s * y_s` for every training sample.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Indices with `alpha_s > 0`.
    pub support: Vec<usize>,
    pub c: f64,
    pub iterations: usize,
    /// Final dual objective `sum(alpha) - 1/2 sum alpha_s alpha_t y_s y_t K`.
    pub objective: f64,
}

impl SvmModel {
    pub fn alpha(&self) -> impl Iterator<Item = f64> + '_ {
        self.dual_coef.iter().map(|c| c.abs())
    }

    pub fn decision_values(&self, k_test: &KernelGram) -> Result<Vec<f64>> {
        if k_test.cols() != self.dual_coef.len() {
            return Err(Error::Shape(format!(
                "test kernel has {} columns, model was trained on {} samples",
                k_test.cols(),
                self.dual_coef.len()
            )));
        }
        Ok((0..k_test.rows())
            .map(|t| {
                let row = k_test.row(t);
                self.support.iter().map(|&s| self.dual_coef[s] * row[s]).sum::<f64>() + self.bias
            })
            .collect())
    }
}

/// Solver output with the dual objective recorded after every iteration.
#[derive(Debug, Clone)]
pub struct TracedFit {
    pub model: SvmModel,
    pub objective_trace: Vec<f64>,
}

pub fn svm_train_precomputed(k: &KernelGram, y: &[Label], params: &SmoParams) -> Result<SvmModel> {
    Ok(solve(k, y, params, false)?.model)
}

pub fn svm_train_traced(k: &KernelGram, y: &[Label], params: &SmoParams) -> Result<TracedFit> {
    solve(k, y, params, true)
}

/// `sign(sum_s alpha_s y_s K(t, s) + b)` with `sign(0) = +1`.
pub fn svm_predict(model: &SvmModel, k_test: &KernelGram) -> Result<Vec<Label>> {
    Ok(model
        .decision_values(k_test)?
        .into_iter()
        .map(sign_label)
        .collect())
}

fn solve(k: &KernelGram, y: &[Label], params: &SmoParams, trace: bool) -> Result<TracedFit> {
    if !k.is_square() {
        return Err(Error::Shape(format!(
            "training kernel is {}x{}, expected square",
            k.rows(),
            k.cols()
        )));
    }
    if k.rows() != y.len() {
        return Err(Error::Shape(format!(
            "kernel covers {} samples, {} labels given",
            k.rows(),
            y.len()
        )));
    }
    if k.asymmetry() > 1e-10 {
        return Err(Error::Shape("training kernel is not symmetric".into()));
    }
    require_both_classes(y)?;
    if !(params.c > 0.0 && params.c.is_finite()) || !(params.tol > 0.0) {
        return Err(Error::Config(format!(
            "SMO needs C > 0 and tol > 0 (got C = {}, tol = {})",
            params.c, params.tol
        )));
    }

    let n = y.len();
    let c = params.c;
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let mut alpha = vec![0.0; n];
    // gradient of f(a) = 1/2 a'Qa - e'a, Q_st = y_s y_t K_st
    let mut grad = vec![-1.0; n];
    let mut objective_trace = Vec::new();
    let objective = |alpha: &[f64], grad: &[f64]| -> f64 {
        // -f = 1/2 e'a - 1/2 a'G
        alpha
            .iter()
            .zip(grad)
            .map(|(a, g)| 0.5 * a - 0.5 * a * g)
            .sum()
    };

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let (mut gmax, mut gmin);
    loop {
        // i: maximal -y G over I_up
        gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], yf[t]) {
                let v = -yf[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        gmin = f64::INFINITY;
        for t in 0..n {
            if in_low(alpha[t], yf[t]) {
                gmin = gmin.min(-yf[t] * grad[t]);
            }
        }
        let Some(i) = i_sel else { break };
        if gmax - gmin < params.tol || iterations >= params.max_iter {
            break;
        }

        // j: second-order choice among violating members of I_low
        let kii = k.get(i, i);
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], yf[t]) {
                continue;
            }
            let v = -yf[t] * grad[t];
            let b = gmax - v;
            if b > 0.0 {
                let mut a = kii + k.get(t, t) - 2.0 * k.get(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel else { break };

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = kii + k.get(j, j) - 2.0 * k.get(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        if yf[i] != yf[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += yf[t] * (yf[i] * k.get(t, i) * di + yf[j] * k.get(t, j) * dj);
        }
        iterations += 1;
        if trace {
            objective_trace.push(objective(&alpha, &grad));
        }
    }

    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += -yf[t] * grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else if gmax.is_finite() && gmin.is_finite() {
        (gmax + gmin) / 2.0
    } else {
        0.0
    };
    if !bias.is_finite() {
        return Err(Error::Numerical("SMO produced a non-finite bias".into()));
    }

    let dual_coef: Vec<f64> = alpha.iter().zip(&yf).map(|(a, y)| a * y).collect();
    let support = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let model = SvmModel {
        dual_coef,
        bias,
        support,
        c,
        iterations,
        objective: objective(&alpha, &grad),
    };
    Ok(TracedFit {
        model,
        objective_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_kernel(points: &[f64]) -> KernelGram {
        KernelGram::symmetric_from_fn(points.len(), |i, j| points[i] * points[j] + 1.0)
    }

    /// Brute-force oracle: best dual objective over alpha in {0, C/2, C}^4
    /// restricted to the equality constraint.
    fn grid_oracle(k: &KernelGram, y: &[Label], c: f64) -> f64 {
        let levels = [0.0, c / 2.0, c];
        let mut best = f64::NEG_INFINITY;
        for code in 0..81usize {
            let a: Vec<f64> = (0..4).map(|i| levels[(code / 3usize.pow(i as u32)) % 3]).collect();
            let eq: f64 = a.iter().zip(y).map(|(a, &y)| a * f64::from(y)).sum();
            if eq.abs() > 1e-12 {
                continue;
            }
            let mut obj: f64 = a.iter().sum();
            for s in 0..4 {
                for t in 0..4 {
                    obj -= 0.5 * a[s] * a[t] * f64::from(y[s] * y[t]) * k.get(s, t);
                }
            }
            best = best.max(obj);
        }
        best
    }

    #[test]
    fn block_kernel_is_fitted_perfectly() {
        let y = [1, 1, -1, -1];
        let k = KernelGram::symmetric_from_fn(4, |i, j| {
            if i == j {
                1.0
            } else if y[i] == y[j] {
                0.1
            } else {
                0.0
            }
        });
        let params = SmoParams {
            tol: 1e-9,
            ..Default::default()
        };
        let model = svm_train_precomputed(&k, &y, &params).unwrap();
        assert_eq!(svm_predict(&model, &k).unwrap(), y.to_vec());
        // the solver's optimum dominates every grid point
        assert!(model.objective >= grid_oracle(&k, &y, 1.0) - 1e-9);
    }

    #[test]
    fn dual_feasibility_and_monotone_objective() {
        let x = [-2.0, -1.5, -0.2, 0.1, 0.4, 1.0, 2.5, -0.3];
        let y = [-1, -1, 1, -1, 1, 1, 1, -1];
        let k = linear_kernel(&x);
        let fit = svm_train_traced(&k, &y, &SmoParams::default()).unwrap();
        let m = &fit.model;
        assert!(m.alpha().all(|a| (0.0..=m.c).contains(&a)));
        assert!(m.dual_coef.iter().sum::<f64>().abs() < 1e-6);
        assert!(fit.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn zero_model_predicts_from_bias() {
        let model = SvmModel {
            dual_coef: vec![0.0; 3],
            bias: 0.3,
            support: vec![],
            c: 1.0,
            iterations: 0,
            objective: 0.0,
        };
        let k = KernelGram::new(2, 3, vec![0.5; 6]).unwrap();
        assert_eq!(svm_predict(&model, &k).unwrap(), vec![1, 1]);
        let bad = KernelGram::new(1, 2, vec![0.0; 2]).unwrap();
        assert!(matches!(svm_predict(&model, &bad), Err(Error::Shape(_))));
    }

    #[test]
    fn rejects_single_class_and_asymmetric_kernels() {
        let k = linear_kernel(&[1.0, 2.0]);
        assert!(matches!(
            svm_train_precomputed(&k, &[1, 1], &SmoParams::default()),
            Err(Error::Train(_))
        ));
        let skew = KernelGram::new(2, 2, vec![1.0, 0.5, 0.2, 1.0]).unwrap();
        assert!(matches!(
            svm_train_precomputed(&skew, &[1, -1], &SmoParams::default()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn flipping_labels_negates_decisions() {
        let x = [-2.0, -1.0, -0.5, 0.3, 1.2, 2.0];
        let y = [-1, -1, 1, -1, 1, 1];
        let flipped: Vec<Label> = y.iter().map(|l| -l).collect();
        let k = linear_kernel(&x);
        let params = SmoParams {
            tol: 1e-10,
            ..Default::default()
        };
        let a = svm_train_precomputed(&k, &y, &params).unwrap();
        let b = svm_train_precomputed(&k, &flipped, &params).unwrap();
        let probe = KernelGram::from_fn(5, 6, |i, j| (i as f64 - 2.0) * x[j] + 1.0);
        for (u, v) in a.decision_values(&probe).unwrap().iter().zip(b.decision_values(&probe).unwrap()) {
            assert!((u + v).abs() < 1e-6);
        }
    }

    #[test]
    fn duplicated_separable_data_keeps_decision_values() {
        // well separated: the hard-margin solution never touches C
        let x = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        let y = [-1, -1, -1, 1, 1, 1];
        let params = SmoParams {
            c: 10.0,
            tol: 1e-10,
            ..Default::default()
        };
        let once = svm_train_precomputed(&linear_kernel(&x), &y, &params).unwrap();
        let xx: Vec<f64> = x.iter().chain(&x).copied().collect();
        let yy: Vec<Label> = y.iter().chain(&y).copied().collect();
        let twice = svm_train_precomputed(&linear_kernel(&xx), &yy, &params).unwrap();
        let probe: Vec<f64> = (0..9).map(|i| -4.0 + i as f64).collect();
        let p1 = KernelGram::from_fn(9, 6, |i, j| probe[i] * x[j] + 1.0);
        let p2 = KernelGram::from_fn(9, 12, |i, j| probe[i] * xx[j] + 1.0);
        for (a, b) in once.decision_values(&p1).unwrap().iter().zip(twice.decision_values(&p2).unwrap()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
