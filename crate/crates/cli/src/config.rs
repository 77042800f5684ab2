//! Run configuration: the JSON file layout and its validation.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qvision_core::baselines::LinearSvmParams;
use qvision_core::enhance::Enhancement;
use qvision_core::eval::ReportFormat;
use qvision_core::ingest::SyntheticConfig;
use qvision_core::qboost::{QuboMode, SaParams, ThresholdMode};
use qvision_core::qkernel::MAX_QUBITS;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Root-seed offsets of the pipeline stages.
pub mod seed_offset {
    pub const SPLIT: u64 = 1;
    pub const RESAMPLE: u64 = 2;
    pub const SOLVER: u64 = 3;
    pub const LINEAR_SVM: u64 = 4;
}

/// Where samples come from. Exactly one source per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataConfig {
    Synthetic(SyntheticConfig),
    /// JSON file holding a synthetic generator configuration.
    Manifest(PathBuf),
    Gdxray {
        root: PathBuf,
        #[serde(default)]
        series: Option<Vec<String>>,
        /// `[height, width]` every image is resized to.
        #[serde(default = "default_gdxray_size")]
        size: Option<[usize; 2]>,
    },
}

fn default_gdxray_size() -> Option<[usize; 2]> {
    Some([
        qvision_core::ingest::TARGET_HEIGHT,
        qvision_core::ingest::TARGET_WIDTH,
    ])
}

impl DataConfig {
    /// A JSON file is a synthetic manifest, a directory a GDXray root.
    pub fn from_path(path: &Path) -> Self {
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            DataConfig::Manifest(path.to_path_buf())
        } else {
            DataConfig::Gdxray {
                root: path.to_path_buf(),
                series: None,
                size: default_gdxray_size(),
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        match self {
            DataConfig::Synthetic(s) => Ok(s.validate()?),
            DataConfig::Manifest(p) if !p.is_file() => Err(CliError::Usage(format!(
                "synthetic manifest {} does not exist",
                p.display()
            ))),
            DataConfig::Gdxray { root, .. } if !root.is_dir() => Err(CliError::Usage(format!(
                "dataset root {} is not a directory",
                root.display()
            ))),
            DataConfig::Gdxray { size: Some([h, w]), .. } if *h == 0 || *w == 0 => {
                Err(CliError::Usage(format!("resize target {h}x{w} is empty")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcaConfig {
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Linsvm,
    Rbfsvm,
    Adaboost,
    Qsvm,
    QboostExhaustive,
    QboostSa,
    /// Exact selection beyond the exhaustive cap.
    QboostBranchBound,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Linsvm,
        ModelKind::Rbfsvm,
        ModelKind::Adaboost,
        ModelKind::Qsvm,
        ModelKind::QboostExhaustive,
        ModelKind::QboostSa,
        ModelKind::QboostBranchBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linsvm => "linsvm",
            ModelKind::Rbfsvm => "rbfsvm",
            ModelKind::Adaboost => "adaboost",
            ModelKind::Qsvm => "qsvm",
            ModelKind::QboostExhaustive => "qboost-exhaustive",
            ModelKind::QboostSa => "qboost-sa",
            ModelKind::QboostBranchBound => "qboost-branch-bound",
        }
    }

    pub fn is_qboost(self) -> bool {
        matches!(
            self,
            ModelKind::QboostExhaustive | ModelKind::QboostSa | ModelKind::QboostBranchBound
        )
    }

    pub fn uses_trees(self) -> bool {
        self.is_qboost() || self == ModelKind::Adaboost
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        // `qboost` alone means the exhaustive variant
        if s == "qboost" {
            return Ok(ModelKind::QboostExhaustive);
        }
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown model '{s}'")))
    }
}

/// One benchmark row: a model kind and optional per-row overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trees: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            trees: None,
            depth: None,
        }
    }

    pub fn with_trees(kind: ModelKind, trees: usize) -> Self {
        Self {
            trees: Some(trees),
            ..Self::new(kind)
        }
    }
}

impl FromStr for ModelSpec {
    type Err = CliError;

    /// `kind` or `kind:trees`.
    fn from_str(s: &str) -> CliResult<Self> {
        let (kind, trees) = match s.split_once(':') {
            Some((k, t)) => (
                k,
                Some(
                    t.parse()
                        .map_err(|_| CliError::Usage(format!("bad tree count in '{s}'")))?,
                ),
            ),
            None => (s, None),
        };
        Ok(Self {
            kind: kind.parse()?,
            trees,
            depth: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub models: Vec<ModelSpec>,
    /// Tree count of boosted models without a per-row override.
    pub trees: usize,
    /// Depth of the QBoost weak learners.
    pub depth: usize,
    /// Depth of the AdaBoost weak learners.
    pub adaboost_depth: usize,
    pub lambda: f64,
    pub qubo_mode: QuboMode,
    pub threshold: ThresholdMode,
    pub sa: SaParams,
    pub svm_c: f64,
    pub linear: LinearSvmParams,
    pub qsvm_reps: usize,
    pub qsvm_c: f64,
    pub qsvm_entanglement: Entanglement,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            models: vec![ModelSpec::new(ModelKind::QboostExhaustive)],
            trees: 10,
            depth: 3,
            adaboost_depth: 1,
            lambda: 0.0,
            qubo_mode: QuboMode::Consistent,
            threshold: ThresholdMode::Sweep,
            sa: SaParams::default(),
            svm_c: 1.0,
            linear: LinearSvmParams::default(),
            qsvm_reps: 2,
            qsvm_c: 1.0,
            qsvm_entanglement: Entanglement::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    #[default]
    Full,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// QBoost regularisation grid over one trained ensemble.
    #[default]
    Lambda,
    /// Regularisation grid repeated for every weak-learner depth.
    Depth,
    /// Inference time against selected-tree count.
    Inference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub lambda: Vec<f64>,
    /// Read `lambda` as fractions of the ceiling past which no single tree
    /// pays for itself.
    pub relative: bool,
    pub depth: Vec<usize>,
    /// Selected-tree counts of the inference sweep.
    pub trees: Vec<usize>,
    /// Timing repetitions (median reported).
    pub repetitions: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kind: SweepKind::Lambda,
            lambda: Vec::new(),
            relative: false,
            depth: vec![2, 3, 4],
            trees: vec![5, 10, 20, 40],
            repetitions: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    /// Random under-sampling of the training split.
    pub rus: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            rus: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    pub format: ReportFormat,
    /// Fill the timing columns; off keeps reports byte-reproducible.
    pub timings: bool,
    pub model: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            report: None,
            format: ReportFormat::Csv,
            timings: false,
            model: None,
        }
    }
}

/// A complete pipeline description.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<DataConfig>,
    pub enhance: Enhancement,
    pub pca: Option<PcaConfig>,
    pub model: ModelConfig,
    pub sweep: SweepConfig,
    pub split: SplitConfig,
    pub seed: u64,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn data(&self) -> CliResult<&DataConfig> {
        self.data
            .as_ref()
            .ok_or_else(|| CliError::Usage("no data source configured (use --data)".into()))
    }

    /// Feature count reaching the models, when known without loading data.
    pub fn feature_dim(&self) -> Option<usize> {
        if let Some(p) = self.pca {
            return Some(p.k);
        }
        match self.data.as_ref()? {
            DataConfig::Synthetic(s) => Some(s.image_size[0] * s.image_size[1]),
            DataConfig::Gdxray { size: Some([h, w]), .. } => Some(h * w),
            _ => None,
        }
    }

    /// Checks everything that can be checked before touching data.
    pub fn validate(&self) -> CliResult<()> {
        self.data()?.validate()?;
        if let Some(p) = self.pca {
            if p.k == 0 {
                return Err(CliError::Usage("pca k must be at least 1".into()));
            }
        }
        let m = &self.model;
        if m.models.is_empty() {
            return Err(CliError::Usage("no models selected".into()));
        }
        if m.trees == 0 || m.depth == 0 || m.adaboost_depth == 0 {
            return Err(CliError::Usage("tree counts and depths must be at least 1".into()));
        }
        if !m.lambda.is_finite() {
            return Err(CliError::Usage(format!("lambda {} is not finite", m.lambda)));
        }
        if m.models.iter().any(|s| s.trees == Some(0) || s.depth == Some(0)) {
            return Err(CliError::Usage("per-model tree counts and depths must be at least 1".into()));
        }
        m.sa.validate()?;
        if !(m.svm_c > 0.0 && m.qsvm_c > 0.0) || m.qsvm_reps == 0 {
            return Err(CliError::Usage("SVM C must be positive and qsvm reps at least 1".into()));
        }
        if m.models.iter().any(|s| s.kind == ModelKind::Qsvm) {
            match self.feature_dim() {
                Some(d) if d > MAX_QUBITS => {
                    return Err(CliError::Core(qvision_core::Error::Capacity(format!(
                        "qsvm needs one qubit per feature: {d} features exceed the {MAX_QUBITS}-qubit cap"
                    ))))
                }
                _ => {}
            }
        }
        let f = self.split.test_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::Usage(format!("test fraction {f} must lie in (0, 1)")));
        }
        if self.sweep.repetitions == 0 {
            return Err(CliError::Usage("timing repetitions must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_spec_parsing() {
        let s: ModelSpec = "adaboost:50".parse().unwrap();
        assert_eq!((s.kind, s.trees), (ModelKind::Adaboost, Some(50)));
        assert_eq!("qboost".parse::<ModelSpec>().unwrap().kind, ModelKind::QboostExhaustive);
        assert!("svm".parse::<ModelSpec>().is_err());
        assert!("adaboost:x".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn schema_round_trip() {
        let text = r#"{
            "data": {"synthetic": {"seed": 7, "n_positive": 10, "n_negative": 10,
                     "image_size": [16, 16], "defect_contrast": 0.8, "noise_std": 12.0}},
            "enhance": {"kind": "histeq"},
            "pca": {"k": 4},
            "model": {"models": [{"kind": "adaboost", "trees": 50}], "depth": 2},
            "sweep": {"lambda": [0, 5, 10]},
            "seed": 3
        }"#;
        let c: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.pca, Some(PcaConfig { k: 4 }));
        assert_eq!(c.model.models[0].trees, Some(50));
        assert_eq!(c.sweep.lambda, vec![0.0, 5.0, 10.0]);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_field_is_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sede": 1}"#).is_err());
    }

    #[test]
    fn qsvm_over_cap_fails_validation() {
        let mut c = RunConfig {
            data: Some(DataConfig::Synthetic(SyntheticConfig::default())),
            pca: Some(PcaConfig { k: 30 }),
            ..RunConfig::default()
        };
        c.model.models = vec![ModelSpec::new(ModelKind::Qsvm)];
        assert!(matches!(
            c.validate(),
            Err(CliError::Core(qvision_core::Error::Capacity(_)))
        ));
        c.pca = Some(PcaConfig { k: 10 });
        c.validate().unwrap();
    }
}
