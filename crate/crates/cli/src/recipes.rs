//! Named presets for the standard experiment grids.

use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;

use crate::config::{ModelKind, ModelSpec, PcaConfig, RunConfig, SweepKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Recipe {
    /// Seven-model comparison on ten principal components.
    Table1,
    /// Regularisation sweep over ten trees.
    Table5,
    /// Regularisation sweep over fifty trees.
    Table7,
    /// Regularisation sweep repeated for tree depths 2, 3 and 4, with timings.
    Table9,
}

/// Regularisation grid of the sweep recipes, as fractions of the ceiling past
/// which no single tree lowers the QUBO energy on its own.
pub const RELATIVE_GRID: [f64; 20] = [
    0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95,
];

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::Table1 => "table1",
            Recipe::Table5 => "table5",
            Recipe::Table7 => "table7",
            Recipe::Table9 => "table9",
        }
    }

    /// True when the recipe produces sweep rows rather than one row per model.
    pub fn is_sweep(self) -> bool {
        self != Recipe::Table1
    }

    /// Overwrites the fields the recipe defines; the data source, seed and
    /// output paths are kept.
    pub fn apply(self, cfg: &mut RunConfig) {
        cfg.pca = Some(PcaConfig { k: 10 });
        match self {
            Recipe::Table1 => {
                use ModelKind::*;
                cfg.model.models = vec![
                    ModelSpec::new(Linsvm),
                    ModelSpec::new(Rbfsvm),
                    ModelSpec::with_trees(Adaboost, 10),
                    ModelSpec::with_trees(Adaboost, 50),
                    ModelSpec::new(Qsvm),
                    ModelSpec::with_trees(QboostExhaustive, 10),
                    ModelSpec::with_trees(QboostSa, 10),
                ];
            }
            Recipe::Table5 => {
                cfg.model.models = vec![ModelSpec::with_trees(ModelKind::QboostExhaustive, 10)];
                cfg.sweep.kind = SweepKind::Lambda;
                cfg.sweep.lambda = RELATIVE_GRID.to_vec();
                cfg.sweep.relative = true;
            }
            Recipe::Table7 => {
                cfg.model.models = vec![ModelSpec::with_trees(ModelKind::QboostBranchBound, 50)];
                cfg.sweep.kind = SweepKind::Lambda;
                cfg.sweep.lambda = RELATIVE_GRID.to_vec();
                cfg.sweep.relative = true;
            }
            Recipe::Table9 => {
                cfg.model.models = vec![ModelSpec::with_trees(ModelKind::QboostExhaustive, 10)];
                cfg.sweep.kind = SweepKind::Depth;
                cfg.sweep.depth = vec![2, 3, 4];
                cfg.sweep.lambda = RELATIVE_GRID.to_vec();
                cfg.sweep.relative = true;
                cfg.output.timings = true;
            }
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Recipe as ValueEnum>::from_str(s, true)
    }
}
