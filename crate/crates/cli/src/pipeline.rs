//! Load, enhance, split, reduce, train and evaluate.

use std::fs;
use std::path::Path;
use std::time::Instant;

use qvision_core::baselines::{
    adaboost_fit, linear_svm_fit, rbf_svm_fit, AdaBoostModel, Gamma, LinearSvmModel, LinearSvmParams, RbfSvmModel,
    RbfSvmParams,
};
use qvision_core::eval::{
    confusion, random_under_sample, stratified_split, sweep_regularization, time_inference, MetricRow, SweepSetup,
};
use qvision_core::ingest::{generate_synthetic, load_gdxray, standardize_apply, standardize_fit, Dataset, MinMaxModel, SyntheticConfig};
use qvision_core::qboost::{lambda_ceiling, train_weak_ensemble, QBoostModel, Solver, WeakEnsemble};
use qvision_core::qkernel::{FeatureMapSpec, QsvmModel, SmoParams};
use qvision_core::reduce::{pca_fit, pca_transform, PcaModel};
use qvision_core::{Classifier, FeatureMatrix, Label};

use crate::config::{seed_offset, DataConfig, Entanglement, ModelKind, ModelSpec, RunConfig, SweepKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn load_dataset(data: &DataConfig) -> CliResult<Dataset> {
    Ok(match data {
        DataConfig::Synthetic(s) => generate_synthetic(s)?,
        DataConfig::Manifest(path) => generate_synthetic(&read_manifest(path)?)?,
        DataConfig::Gdxray { root, series, .. } => load_gdxray(root, series.as_deref())?,
    })
}

pub fn read_manifest(path: &std::path::Path) -> CliResult<SyntheticConfig> {
    let text = fs::read_to_string(path).map_err(|e| qvision_core::Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid synthetic manifest {}: {e}", path.display())))
}

/// Feature matrix of a loaded dataset after enhancement.
pub fn dataset_features(cfg: &RunConfig, dataset: &Dataset) -> CliResult<FeatureMatrix> {
    let enhanced = dataset.map_images(|img| cfg.enhance.apply(img))?;
    let target = match cfg.data()? {
        DataConfig::Gdxray { size: Some([h, w]), .. } => Some((*h, *w)),
        _ => None,
    };
    Ok(enhanced.to_features(target)?)
}

/// Train/test data after splitting, optional under-sampling and PCA.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub x_train: FeatureMatrix,
    pub y_train: Vec<Label>,
    pub x_test: FeatureMatrix,
    pub y_test: Vec<Label>,
    pub pca: Option<PcaModel>,
}

pub fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    let dataset = load_dataset(cfg.data()?)?;
    let x = dataset_features(cfg, &dataset)?;
    prepare_features(cfg, &x, &dataset.labels())
}

pub fn prepare_features(cfg: &RunConfig, x: &FeatureMatrix, y: &[Label]) -> CliResult<Prepared> {
    let split = stratified_split(y, cfg.split.test_fraction, cfg.seed + seed_offset::SPLIT)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
    let (mut x_train, mut y_train) = (x.select_rows(&split.train), pick(&split.train));
    let (mut x_test, y_test) = (x.select_rows(&split.test), pick(&split.test));
    if cfg.split.rus {
        (x_train, y_train) = random_under_sample(&x_train, &y_train, cfg.seed + seed_offset::RESAMPLE)?;
    }
    let mut pca = None;
    if let Some(p) = cfg.pca {
        let model = pca_fit(&x_train, p.k)?;
        x_train = pca_transform(&model, &x_train)?;
        x_test = pca_transform(&model, &x_test)?;
        pca = Some(model);
    }
    Ok(Prepared {
        x_train,
        y_train,
        x_test,
        y_test,
        pca,
    })
}

/// Any trained model of the benchmark set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "kebab-case")]
pub enum AnyModel {
    Linsvm(LinearSvmModel),
    Rbfsvm(RbfSvmModel),
    Adaboost(AdaBoostModel),
    Qsvm(QsvmModel),
    Qboost(QBoostModel),
}

impl AnyModel {
    pub fn classifier(&self) -> &dyn Classifier {
        match self {
            AnyModel::Linsvm(m) => m,
            AnyModel::Rbfsvm(m) => m,
            AnyModel::Adaboost(m) => m,
            AnyModel::Qsvm(m) => m,
            AnyModel::Qboost(m) => m,
        }
    }
}

/// A trained model together with the input transform it expects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trained {
    pub name: String,
    pub model: AnyModel,
    pub input: InputTransform,
    pub selected: Option<usize>,
    pub initial: Option<usize>,
    pub lambda: Option<f64>,
    pub depth: Option<usize>,
    pub train_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputTransform {
    Identity,
    Standardize(qvision_core::ingest::StandardizerModel),
    MinMax(MinMaxModel),
}

impl InputTransform {
    pub fn apply(&self, x: &FeatureMatrix) -> CliResult<FeatureMatrix> {
        Ok(match self {
            InputTransform::Identity => x.clone(),
            InputTransform::Standardize(m) => standardize_apply(m, x)?,
            InputTransform::MinMax(m) => m.apply(x)?,
        })
    }
}

pub fn solver_for(cfg: &RunConfig, kind: ModelKind) -> Solver {
    match kind {
        ModelKind::QboostSa => Solver::Sa {
            params: cfg.model.sa.clone(),
            seed: cfg.seed + seed_offset::SOLVER,
        },
        ModelKind::QboostBranchBound => Solver::BranchBound,
        _ => Solver::Exhaustive,
    }
}

pub fn qsvm_spec(cfg: &RunConfig, n: usize) -> FeatureMapSpec {
    match cfg.model.qsvm_entanglement {
        Entanglement::Full => FeatureMapSpec::full(n, cfg.model.qsvm_reps),
        Entanglement::Linear => FeatureMapSpec::linear(n, cfg.model.qsvm_reps),
    }
}

impl Trained {
    fn plain(name: impl Into<String>, model: AnyModel, input: InputTransform) -> Self {
        Self {
            name: name.into(),
            model,
            input,
            selected: None,
            initial: None,
            lambda: None,
            depth: None,
            train_s: 0.0,
        }
    }

    pub fn predict(&self, x: &FeatureMatrix) -> CliResult<Vec<Label>> {
        Ok(self.model.classifier().predict_all(&self.input.apply(x)?)?)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| qvision_core::Error::Serde(e))?;
        fs::write(path, text).map_err(|source| CliError::Output {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| qvision_core::Error::io(path, e))?;
        Ok(serde_json::from_str(&text).map_err(|e| qvision_core::Error::Serde(e))?)
    }
}

pub fn train_model(cfg: &RunConfig, spec: &ModelSpec, data: &Prepared) -> CliResult<Trained> {
    let m = &cfg.model;
    let trees = spec.trees.unwrap_or(m.trees);
    let (x, y) = (&data.x_train, &data.y_train[..]);
    let start = Instant::now();
    let mut t = match spec.kind {
        ModelKind::Linsvm => {
            let s = standardize_fit(x)?;
            let params = LinearSvmParams {
                seed: cfg.seed + seed_offset::LINEAR_SVM,
                ..m.linear
            };
            let model = linear_svm_fit(&standardize_apply(&s, x)?, y, &params)?;
            Trained::plain("Linear SVM", AnyModel::Linsvm(model), InputTransform::Standardize(s))
        }
        ModelKind::Rbfsvm => {
            let s = standardize_fit(x)?;
            let params = RbfSvmParams {
                c: m.svm_c,
                gamma: Gamma::Scale,
                ..RbfSvmParams::default()
            };
            let model = rbf_svm_fit(&standardize_apply(&s, x)?, y, &params)?;
            Trained::plain("Non-Linear SVM", AnyModel::Rbfsvm(model), InputTransform::Standardize(s))
        }
        ModelKind::Adaboost => {
            let depth = spec.depth.unwrap_or(m.adaboost_depth);
            let model = adaboost_fit(x, y, trees, depth)?;
            Trained {
                initial: Some(trees),
                depth: Some(depth),
                ..Trained::plain(format!("AdaBoost ({trees} trees)"), AnyModel::Adaboost(model), InputTransform::Identity)
            }
        }
        ModelKind::Qsvm => {
            let scale = MinMaxModel::fit(x, 0.0, std::f64::consts::PI)?;
            let params = SmoParams {
                c: m.qsvm_c,
                ..SmoParams::default()
            };
            let model = QsvmModel::fit(&scale.apply(x)?, y, qsvm_spec(cfg, x.cols()), &params)?;
            Trained::plain("QSVM (simulated)", AnyModel::Qsvm(model), InputTransform::MinMax(scale))
        }
        kind => {
            let depth = spec.depth.unwrap_or(m.depth);
            let ensemble = train_weak_ensemble(x, y, trees, depth)?;
            let solver = solver_for(cfg, kind);
            let model = QBoostModel::from_ensemble(&ensemble, y, depth, m.lambda, m.qubo_mode, m.threshold, &solver)?;
            let name = format!("QBoost ({}/{trees} trees, {})", model.selected(), solver.name());
            Trained {
                selected: Some(model.selected()),
                initial: Some(trees),
                lambda: Some(m.lambda),
                depth: Some(depth),
                ..Trained::plain(name, AnyModel::Qboost(model), InputTransform::Identity)
            }
        }
    };
    t.train_s = start.elapsed().as_secs_f64();
    Ok(t)
}

pub fn evaluate(cfg: &RunConfig, trained: &Trained, data: &Prepared) -> CliResult<MetricRow> {
    let x_test = trained.input.apply(&data.x_test)?;
    let pred = trained.model.classifier().predict_all(&x_test)?;
    let mut row = MetricRow::from_confusion(trained.name.clone(), &confusion(&data.y_test, &pred)?);
    row.selected = trained.selected;
    row.initial = trained.initial;
    row.lambda = trained.lambda;
    row.depth = trained.depth;
    if cfg.output.timings {
        row.train_s = Some(trained.train_s);
        row.infer_ms = Some(time_inference(trained.model.classifier(), &x_test, cfg.sweep.repetitions)?.per_image_ms);
    }
    Ok(row)
}

/// One row per configured model, in configuration order.
pub fn bench(cfg: &RunConfig) -> CliResult<Vec<MetricRow>> {
    let data = prepare(cfg)?;
    bench_prepared(cfg, &data)
}

pub fn bench_prepared(cfg: &RunConfig, data: &Prepared) -> CliResult<Vec<MetricRow>> {
    cfg.model
        .models
        .iter()
        .map(|spec| {
            check_qsvm_width(spec, data)?;
            evaluate(cfg, &train_model(cfg, spec, data)?, data)
        })
        .collect()
}

fn check_qsvm_width(spec: &ModelSpec, data: &Prepared) -> CliResult<()> {
    let d = data.x_train.cols();
    if spec.kind == ModelKind::Qsvm && d > qvision_core::qkernel::MAX_QUBITS {
        return Err(qvision_core::Error::Capacity(format!(
            "qsvm needs one qubit per feature: {d} features exceed the {}-qubit cap",
            qvision_core::qkernel::MAX_QUBITS
        ))
        .into());
    }
    Ok(())
}

/// Regularisation, depth or inference sweep over the first QBoost model.
pub fn sweep(cfg: &RunConfig) -> CliResult<Vec<MetricRow>> {
    let data = prepare(cfg)?;
    sweep_prepared(cfg, &data)
}

fn sweep_model(cfg: &RunConfig) -> ModelSpec {
    cfg.model
        .models
        .iter()
        .copied()
        .find(|s| s.kind.is_qboost())
        .unwrap_or(ModelSpec::new(ModelKind::QboostExhaustive))
}

pub fn sweep_prepared(cfg: &RunConfig, data: &Prepared) -> CliResult<Vec<MetricRow>> {
    let spec = sweep_model(cfg);
    let trees = spec.trees.unwrap_or(cfg.model.trees);
    match cfg.sweep.kind {
        SweepKind::Lambda => {
            let depth = spec.depth.unwrap_or(cfg.model.depth);
            lambda_rows(cfg, data, spec.kind, trees, depth)
        }
        SweepKind::Depth => {
            if cfg.sweep.depth.is_empty() {
                return Err(qvision_core::Error::Config("depth grid is empty".into()).into());
            }
            let mut rows = Vec::new();
            for &depth in &cfg.sweep.depth {
                rows.extend(lambda_rows(cfg, data, spec.kind, trees, depth)?);
            }
            Ok(rows)
        }
        SweepKind::Inference => inference_rows(cfg, data, spec),
    }
}

fn lambda_rows(cfg: &RunConfig, data: &Prepared, kind: ModelKind, trees: usize, depth: usize) -> CliResult<Vec<MetricRow>> {
    let start = Instant::now();
    let ensemble = train_weak_ensemble(&data.x_train, &data.y_train, trees, depth)?;
    let train_s = start.elapsed().as_secs_f64();
    let solver = solver_for(cfg, kind);
    let grid = lambda_grid(cfg, &ensemble, &data.y_train)?;
    let setup = SweepSetup {
        ensemble: &ensemble,
        y_train: &data.y_train,
        x_test: &data.x_test,
        y_test: &data.y_test,
        depth,
        mode: cfg.model.qubo_mode,
        threshold: cfg.model.threshold,
        solver: &solver,
    };
    let mut rows = sweep_regularization(&setup, &grid)?;
    if cfg.output.timings {
        for (row, &lambda) in rows.iter_mut().zip(&grid) {
            row.train_s = Some(train_s);
            if row.selected != Some(0) {
                let model = QBoostModel::from_ensemble(
                    &ensemble,
                    &data.y_train,
                    depth,
                    lambda,
                    cfg.model.qubo_mode,
                    cfg.model.threshold,
                    &solver,
                )?;
                row.infer_ms = Some(time_inference(&model, &data.x_test, cfg.sweep.repetitions)?.per_image_ms);
            }
        }
    }
    Ok(rows)
}

/// The configured grid, scaled by the ensemble's ceiling when relative.
pub fn lambda_grid(cfg: &RunConfig, ensemble: &WeakEnsemble, y: &[Label]) -> CliResult<Vec<f64>> {
    if cfg.sweep.lambda.is_empty() {
        return Ok(vec![cfg.model.lambda]);
    }
    if !cfg.sweep.relative {
        return Ok(cfg.sweep.lambda.clone());
    }
    let top = lambda_ceiling(&ensemble.outputs, ensemble.samples, y, cfg.model.qubo_mode)?;
    Ok(cfg.sweep.lambda.iter().map(|f| (f * top * 1e6).round() / 1e6).collect())
}

/// Inference cost against selected-tree count: the first `k` trees of one
/// ensemble are selected directly for every `k` of the grid.
fn inference_rows(cfg: &RunConfig, data: &Prepared, spec: ModelSpec) -> CliResult<Vec<MetricRow>> {
    let grid = &cfg.sweep.trees;
    let Some(&max) = grid.iter().max() else {
        return Err(qvision_core::Error::Config("tree-count grid is empty".into()).into());
    };
    if grid.contains(&0) {
        return Err(qvision_core::Error::Config("tree counts must be at least 1".into()).into());
    }
    let depth = spec.depth.unwrap_or(cfg.model.depth);
    let ensemble = train_weak_ensemble(&data.x_train, &data.y_train, max, depth)?;
    grid.iter()
        .map(|&k| {
            let model = selection_prefix(&ensemble, &data.y_train, k, cfg)?;
            let c = confusion(&data.y_test, &model.predict_all(&data.x_test)?)?;
            let mut row = MetricRow::from_confusion(format!("QBoost ({k}/{max} trees, fixed)"), &c);
            row.selected = Some(k);
            row.initial = Some(max);
            row.depth = Some(depth);
            if cfg.output.timings {
                row.infer_ms = Some(time_inference(&model, &data.x_test, cfg.sweep.repetitions)?.per_image_ms);
            }
            Ok(row)
        })
        .collect()
}

pub fn selection_prefix(ensemble: &WeakEnsemble, y: &[Label], k: usize, cfg: &RunConfig) -> CliResult<QBoostModel> {
    let bits: Vec<bool> = (0..ensemble.len()).map(|i| i < k).collect();
    Ok(QBoostModel::from_selection(ensemble, y, &bits, cfg.model.threshold)?)
}
