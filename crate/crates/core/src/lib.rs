//! Defect classification on grayscale X-ray images with quantum-inspired and
//! classical models.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] loads GDXray-style directories or generates synthetic defect
//!   images and turns them into [`FeatureMatrix`] rows.
//! * [`enhance`] holds the per-image contrast transforms.
//! * [`reduce`] is PCA via the snapshot (Gram-matrix) method.
//! * [`trees`] provides weighted CART weak learners.
//! * [`qkernel`] simulates the ZZ feature map on a statevector and trains an
//!   SVM on the resulting kernel.
//! * [`qboost`] selects a subset of boosted trees by solving a QUBO.
//! * [`baselines`] has linear/RBF SVMs and AdaBoost.
//! * [`eval`] computes metrics, splits, sweeps and renders reports.

pub mod baselines;
pub mod enhance;
mod error;
pub mod eval;
pub mod ingest;
mod matrix;
pub mod qboost;
pub mod qkernel;
pub mod reduce;
pub mod trees;

pub use error::{Error, Result};
pub use matrix::FeatureMatrix;

/// Class label of a sample. `+1` is "defect", `-1` is "no defect".
pub type Label = i8;

/// Sign with the convention used by every classifier here: `sign(0) = +1`.
#[inline]
pub fn sign_label(v: f64) -> Label {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// A trained model that labels feature rows.
pub trait Classifier: Sync {
    fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<Label>>;
}

pub(crate) fn check_labels(y: &[Label]) -> Result<()> {
    if let Some(pos) = y.iter().position(|&l| l != 1 && l != -1) {
        return Err(Error::Shape(format!(
            "label at index {pos} is {}, expected -1 or +1",
            y[pos]
        )));
    }
    Ok(())
}

pub(crate) fn require_both_classes(y: &[Label]) -> Result<()> {
    check_labels(y)?;
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Train(
            "labels contain a single class; both -1 and +1 are required".into(),
        ));
    }
    Ok(())
}
