//! Quantum-kernel SVM: ZZ feature map simulated on a statevector, kernel
//! Gram assembly, and an SMO solver for precomputed kernels.

mod gram;
mod statevector;
mod svm;

use serde::{Deserialize, Serialize};

use crate::{FeatureMatrix, Label, Result};

pub use gram::{kernel_gram, kernel_matrix, KernelGram};
pub use statevector::{
    feature_map_state, kernel_entry, walsh_hadamard, FeatureMapSpec, StateVector, MAX_QUBITS,
};
pub use svm::{svm_predict, svm_train_precomputed, svm_train_traced, SmoParams, SvmModel, TracedFit};

/// Quantum-kernel SVM that keeps its training rows for test-kernel assembly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QsvmModel {
    pub spec: FeatureMapSpec,
    pub svm: SvmModel,
    pub train: FeatureMatrix,
}

impl QsvmModel {
    /// Inputs are expected already scaled to `[0, pi]`.
    pub fn fit(x: &FeatureMatrix, y: &[Label], spec: FeatureMapSpec, params: &SmoParams) -> Result<Self> {
        spec.validate()?;
        let k = kernel_gram(x, &spec)?;
        let svm = svm_train_precomputed(&k, y, params)?;
        Ok(Self {
            spec,
            svm,
            train: x.clone(),
        })
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<Label>> {
        let k = kernel_matrix(x, &self.train, &self.spec)?;
        svm_predict(&self.svm, &k)
    }
}
