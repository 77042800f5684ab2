use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest qubit count simulated (2^24 amplitudes, 256 MiB per state).
pub const MAX_QUBITS: usize = 24;

/// Amplitudes of an `n`-qubit pure state. Qubit `i` is bit `i` of the basis
/// index (little-endian).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { n, amplitudes }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::Shape(format!("{len} amplitudes is not a power of two")));
        }
        Ok(Self {
            n: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply_hadamard_all(&mut self) {
        walsh_hadamard(&mut self.amplitudes);
    }

    /// Multiplies basis amplitude `b` by `exp(i * phases[b])`.
    pub fn apply_phases(&mut self, phases: &[f64]) {
        for (a, &p) in self.amplitudes.iter_mut().zip(phases) {
            *a *= Complex64::from_polar(1.0, p);
        }
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.amplitudes.iter_mut().for_each(|a| *a *= factor);
    }
}

/// In-place normalized Walsh-Hadamard transform (`H` on every qubit).
/// The length must be a power of two.
pub fn walsh_hadamard(data: &mut [Complex64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    data.iter_mut().for_each(|v| *v *= scale);
}

/// ZZ feature map configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMapSpec {
    pub n: usize,
    pub reps: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl FeatureMapSpec {
    /// All unordered qubit pairs.
    pub fn full(n: usize, reps: usize) -> Self {
        let pairs = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self { n, reps, pairs }
    }

    /// Nearest-neighbour chain `(0,1), (1,2), ...`.
    pub fn linear(n: usize, reps: usize) -> Self {
        Self {
            n,
            reps,
            pairs: (1..n).map(|j| (j - 1, j)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("feature map needs at least one repetition".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("feature map needs at least one qubit".into()));
        }
        if self.n > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{} qubits exceeds the statevector cap of {MAX_QUBITS}",
                self.n
            )));
        }
        if let Some(&(i, j)) = self.pairs.iter().find(|&&(i, j)| i >= self.n || j >= self.n || i == j) {
            return Err(Error::Config(format!(
                "pair ({i}, {j}) is invalid for {} qubits",
                self.n
            )));
        }
        Ok(())
    }

    /// Diagonal phase of every basis state:
    /// `sum_i x_i z_i + sum_(i,j) (pi - x_i)(pi - x_j) z_i z_j` with `z = (-1)^bit`.
    pub fn phases(&self, x: &[f64]) -> Vec<f64> {
        use std::f64::consts::PI;
        let pair_coef: Vec<(usize, usize, f64)> = self
            .pairs
            .iter()
            .map(|&(i, j)| (i, j, (PI - x[i]) * (PI - x[j])))
            .collect();
        (0..1usize << self.n)
            .map(|b| {
                let z = |q: usize| if (b >> q) & 1 == 0 { 1.0 } else { -1.0 };
                let single: f64 = x.iter().enumerate().map(|(q, v)| v * z(q)).sum();
                let pair: f64 = pair_coef.iter().map(|&(i, j, c)| c * z(i) * z(j)).sum();
                single + pair
            })
            .collect()
    }
}

/// `[D(x) H^n]^reps |0...0>`.
pub fn feature_map_state(x: &[f64], spec: &FeatureMapSpec) -> Result<StateVector> {
    spec.validate()?;
    if x.len() != spec.n {
        return Err(Error::Shape(format!(
            "row has {} features, feature map expects {}",
            x.len(),
            spec.n
        )));
    }
    let phases = spec.phases(x);
    let mut state = StateVector::zero(spec.n);
    for _ in 0..spec.reps {
        state.apply_hadamard_all();
        state.apply_phases(&phases);
    }
    Ok(state)
}

/// `|<psi(x1)|psi(x2)>|^2`.
pub fn kernel_entry(x1: &[f64], x2: &[f64], spec: &FeatureMapSpec) -> Result<f64> {
    let a = feature_map_state(x1, spec)?;
    let b = feature_map_state(x2, spec)?;
    Ok(a.inner(&b).norm_sqr())
}
