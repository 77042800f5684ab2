use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ensemble::{train_weak_ensemble, WeakEnsemble};
use super::qubo::{build_qubo, QuboMode};
use super::solvers::{BinarySolution, QuboSampler, Solver};
use crate::trees::DecisionTree;
use crate::{check_labels, Error, FeatureMatrix, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Sign of the mean normalised training score, in `{-1, 0, 1}`.
    Paper,
    /// Training-error minimising cut between sorted training scores.
    #[default]
    Sweep,
}

impl std::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "sweep" => Ok(Self::Sweep),
            other => Err(Error::Config(format!("unknown threshold mode '{other}'"))),
        }
    }
}

/// `Σ_i w_i H_si` for every training sample.
fn scores(bits: &[bool], h: &[Label], samples: usize) -> Result<Vec<i64>> {
    let n = bits.len();
    if h.len() != n * samples {
        return Err(Error::Shape(format!(
            "{} outputs for {samples} samples and {n} selection bits",
            h.len()
        )));
    }
    Ok((0..samples)
        .map(|s| {
            h[s * n..(s + 1) * n]
                .iter()
                .zip(bits)
                .filter(|(_, &b)| b)
                .map(|(&v, _)| i64::from(v))
                .sum()
        })
        .collect())
}

#[inline]
fn vote(score: f64, threshold: f64) -> Label {
    if score - threshold >= 0.0 {
        1
    } else {
        -1
    }
}

/// Decision threshold for the selected ensemble. `y` is needed by the sweep
/// mode only.
pub fn compute_threshold(
    bits: &[bool],
    h: &[Label],
    samples: usize,
    y: &[Label],
    mode: ThresholdMode,
) -> Result<f64> {
    if !bits.iter().any(|&b| b) {
        return Err(Error::DegenerateModel("no weak classifier selected".into()));
    }
    let sc = scores(bits, h, samples)?;
    if samples == 0 {
        return Err(Error::Shape("threshold needs training samples".into()));
    }
    match mode {
        ThresholdMode::Paper => {
            let n = bits.len() as f64;
            let mean = sc.iter().map(|&v| v as f64 / n).sum::<f64>() / samples as f64;
            Ok(if mean > 0.0 {
                1.0
            } else if mean < 0.0 {
                -1.0
            } else {
                0.0
            })
        }
        ThresholdMode::Sweep => {
            if y.len() != samples {
                return Err(Error::Shape(format!("{} labels for {samples} samples", y.len())));
            }
            let mut distinct = sc.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let mut candidates = Vec::with_capacity(distinct.len() + 1);
            candidates.push(distinct[0] as f64 - 0.5);
            candidates.extend(distinct.windows(2).map(|p| (p[0] + p[1]) as f64 / 2.0));
            candidates.push(distinct[distinct.len() - 1] as f64 + 0.5);

            let errors = |t: f64| {
                sc.iter()
                    .zip(y)
                    .filter(|(&s, &yi)| vote(s as f64, t) != yi)
                    .count()
            };
            let best = candidates
                .into_iter()
                .map(|t| (errors(t), t))
                .min_by(|a, b| {
                    a.0.cmp(&b.0)
                        .then(a.1.abs().total_cmp(&b.1.abs()))
                        .then(a.1.total_cmp(&b.1))
                })
                .expect("at least two candidates");
            Ok(best.1)
        }
    }
}

/// QBoost training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QBoostConfig {
    pub n_trees: usize,
    pub depth: usize,
    pub lambda: f64,
    pub mode: QuboMode,
    pub threshold: ThresholdMode,
    pub solver: Solver,
}

impl Default for QBoostConfig {
    fn default() -> Self {
        Self {
            n_trees: 10,
            depth: 3,
            lambda: 0.0,
            mode: QuboMode::Consistent,
            threshold: ThresholdMode::Sweep,
            solver: Solver::Exhaustive,
        }
    }
}

/// Strong classifier `sign(Σ_selected h_i(x) - T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QBoostModel {
    pub trees: Vec<DecisionTree>,
    pub bits: Vec<bool>,
    pub threshold: f64,
    pub threshold_mode: ThresholdMode,
    pub lambda: f64,
    pub depth: usize,
    pub mode: QuboMode,
    pub solver: String,
    /// QUBO energy of the selection, when it came from a solver.
    pub energy: Option<f64>,
}

impl QBoostModel {
    pub fn fit(x: &FeatureMatrix, y: &[Label], config: &QBoostConfig) -> Result<Self> {
        check_labels(y)?;
        let ensemble = train_weak_ensemble(x, y, config.n_trees, config.depth)?;
        Self::from_ensemble(&ensemble, y, config.depth, config.lambda, config.mode, config.threshold, &config.solver)
    }

    /// Selects from an already trained ensemble; used to sweep `lambda`
    /// without retraining the trees.
    pub fn from_ensemble(
        ensemble: &WeakEnsemble,
        y: &[Label],
        depth: usize,
        lambda: f64,
        mode: QuboMode,
        threshold_mode: ThresholdMode,
        solver: &Solver,
    ) -> Result<Self> {
        let q = build_qubo(&ensemble.outputs, ensemble.samples, y, lambda, mode)?;
        let sol: BinarySolution = solver.sample(&q)?;
        let mut model = Self::from_selection(ensemble, y, &sol.bits, threshold_mode)?;
        model.lambda = lambda;
        model.depth = depth;
        model.mode = mode;
        model.solver = solver.name().to_string();
        model.energy = Some(sol.energy);
        Ok(model)
    }

    /// Strong classifier over a given selection; `lambda`, `mode` and the
    /// solver fields keep their defaults.
    pub fn from_selection(
        ensemble: &WeakEnsemble,
        y: &[Label],
        bits: &[bool],
        threshold_mode: ThresholdMode,
    ) -> Result<Self> {
        if bits.len() != ensemble.len() {
            return Err(Error::Shape(format!(
                "{} selection bits for {} trees",
                bits.len(),
                ensemble.len()
            )));
        }
        let threshold = compute_threshold(bits, &ensemble.outputs, ensemble.samples, y, threshold_mode)?;
        let trees = ensemble
            .trees
            .iter()
            .zip(bits)
            .filter(|(_, &b)| b)
            .map(|(t, _)| t.clone())
            .collect();
        Ok(Self {
            trees,
            bits: bits.to_vec(),
            threshold,
            threshold_mode,
            lambda: 0.0,
            depth: ensemble.trees.iter().map(|t| t.max_depth).max().unwrap_or(0),
            mode: QuboMode::Consistent,
            solver: "fixed".into(),
            energy: None,
        })
    }

    pub fn selected(&self) -> usize {
        self.trees.len()
    }

    pub fn initial(&self) -> usize {
        self.bits.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        let mut score = 0i64;
        for t in &self.trees {
            score += i64::from(t.predict(x)?);
        }
        Ok(vote(score as f64, self.threshold))
    }

    pub fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<Label>> {
        x.row_iter().map(|r| self.predict(r)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)?;
        if !model.threshold.is_finite() || model.trees.is_empty() {
            return Err(Error::DegenerateModel(format!("{} holds no usable model", path.display())));
        }
        Ok(model)
    }
}

/// Free-function form of [`QBoostModel::predict`].
pub fn qboost_predict(model: &QBoostModel, x: &[f64]) -> Result<Label> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::tree_fit;

    fn h_from_columns(cols: &[&[Label]]) -> (Vec<Label>, usize) {
        let s = cols[0].len();
        let mut h = Vec::new();
        for r in 0..s {
            h.extend(cols.iter().map(|c| c[r]));
        }
        (h, s)
    }

    #[test]
    fn paper_threshold_signs() {
        let (h, s) = h_from_columns(&[&[1, 1, -1], &[1, 1, 1]]);
        assert_eq!(compute_threshold(&[true, true], &h, s, &[], ThresholdMode::Paper).unwrap(), 1.0);
        let (h, s) = h_from_columns(&[&[1, -1, 1, -1]]);
        assert_eq!(compute_threshold(&[true], &h, s, &[], ThresholdMode::Paper).unwrap(), 0.0);
    }

    #[test]
    fn empty_selection_is_degenerate() {
        let (h, s) = h_from_columns(&[&[1, -1]]);
        assert!(matches!(
            compute_threshold(&[false], &h, s, &[1, -1], ThresholdMode::Sweep),
            Err(Error::DegenerateModel(_))
        ));
    }

    #[test]
    fn sweep_never_worse_than_paper() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let (s, n) = (rng.random_range(2..40), rng.random_range(1..8));
            let h: Vec<Label> = (0..s * n).map(|_| if rng.random_bool(0.6) { 1 } else { -1 }).collect();
            let y: Vec<Label> = (0..s).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
            let mut bits: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            bits[0] = true;
            let sc = scores(&bits, &h, s).unwrap();
            let err = |t: f64| sc.iter().zip(&y).filter(|(&v, &yi)| vote(v as f64, t) != yi).count();
            let tp = compute_threshold(&bits, &h, s, &y, ThresholdMode::Paper).unwrap();
            let ts = compute_threshold(&bits, &h, s, &y, ThresholdMode::Sweep).unwrap();
            assert!(err(ts) <= err(tp));
        }
    }

    #[test]
    fn sweep_prefers_small_thresholds() {
        // every cut between the separated groups is perfect; the middle one wins
        let (h, s) = h_from_columns(&[&[1, 1, -1, -1], &[1, 1, -1, -1], &[1, 1, -1, -1]]);
        let t = compute_threshold(&[true; 3], &h, s, &[1, 1, -1, -1], ThresholdMode::Sweep).unwrap();
        assert_eq!(t, 0.0);
    }

    fn stump(threshold: f64) -> DecisionTree {
        let x = FeatureMatrix::from_rows(&[[threshold - 1.0], [threshold + 1.0]]).unwrap();
        tree_fit(&x, &[-1, 1], &[0.5, 0.5], 1).unwrap()
    }

    fn model(trees: Vec<DecisionTree>, threshold: f64) -> QBoostModel {
        let n = trees.len();
        QBoostModel {
            trees,
            bits: vec![true; n],
            threshold,
            threshold_mode: ThresholdMode::Sweep,
            lambda: 0.0,
            depth: 1,
            mode: QuboMode::Consistent,
            solver: "exhaustive".into(),
            energy: None,
        }
    }

    #[test]
    fn single_tree_passthrough_and_majority() {
        let m = model(vec![stump(0.0)], 0.0);
        assert_eq!(m.predict(&[-0.3]).unwrap(), -1);
        assert_eq!(m.predict(&[0.3]).unwrap(), 1);
        // votes (+1, +1, -1) at x = 0.5
        let m = model(vec![stump(0.0), stump(0.2), stump(1.0)], 0.0);
        assert_eq!(m.predict(&[0.5]).unwrap(), 1);
    }

    #[test]
    fn zero_margin_is_positive() {
        let m = model(vec![stump(0.0), stump(1.0)], 0.0);
        assert_eq!(m.predict(&[0.5]).unwrap(), 1);
    }

    #[test]
    fn json_round_trip() {
        let m = model(vec![stump(0.0), stump(1.0)], -0.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        assert_eq!(QBoostModel::load(&path).unwrap(), m);
    }
}
