use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::statevector::{feature_map_state, FeatureMapSpec, StateVector, MAX_QUBITS};
use crate::{Error, FeatureMatrix, Result};

/// Dense `rows x cols` kernel matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGram {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl KernelGram {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} kernel matrix",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds an `m x m` symmetric matrix from `f(i, j)` evaluated on the upper
    /// triangle only.
    pub fn symmetric_from_fn<F>(m: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let upper: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| (i..m).map(|j| f(i, j)).collect())
            .collect();
        let mut values = vec![0.0; m * m];
        for (i, row) in upper.iter().enumerate() {
            for (off, &v) in row.iter().enumerate() {
                let j = i + off;
                values[i * m + j] = v;
                values[j * m + i] = v;
            }
        }
        Self {
            rows: m,
            cols: m,
            values,
        }
    }

    pub fn from_fn<F>(rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let values = (0..rows)
            .into_par_iter()
            .flat_map_iter(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest `|K(i,j) - K(j,i)|`; infinite when not square.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    /// Flat little-endian encoding: `u64 rows`, `u64 cols`, then `rows * cols`
    /// `f64` values row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.values.len());
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::Shape("kernel file shorter than its header".into()));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let (rows, cols) = (word(0) as usize, word(8) as usize);
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .and_then(|n| n.checked_add(16))
            .ok_or_else(|| Error::Shape("kernel header overflows".into()))?;
        if bytes.len() != expected {
            return Err(Error::Shape(format!(
                "kernel file has {} bytes, header {rows}x{cols} requires {expected}",
                bytes.len()
            )));
        }
        let values = bytes[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::new(rows, cols, values)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

fn prepare_states(x: &FeatureMatrix, spec: &FeatureMapSpec) -> Result<Vec<StateVector>> {
    if spec.n > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "{} features exceed the {MAX_QUBITS}-qubit statevector cap",
            spec.n
        )));
    }
    x.expect_cols(spec.n, "kernel_matrix")?;
    x.row_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|r| feature_map_state(r, spec))
        .collect()
}

/// Quantum kernel between two sample sets; every state is prepared once.
pub fn kernel_matrix(a: &FeatureMatrix, b: &FeatureMatrix, spec: &FeatureMapSpec) -> Result<KernelGram> {
    if std::ptr::eq(a, b) {
        return kernel_gram(a, spec);
    }
    let sa = prepare_states(a, spec)?;
    let sb = prepare_states(b, spec)?;
    Ok(KernelGram::from_fn(sa.len(), sb.len(), |i, j| {
        sa[i].inner(&sb[j]).norm_sqr()
    }))
}

/// Square quantum kernel of one sample set: upper triangle computed, then
/// mirrored, diagonal pinned to the computed self-overlap.
pub fn kernel_gram(x: &FeatureMatrix, spec: &FeatureMapSpec) -> Result<KernelGram> {
    let states = prepare_states(x, spec)?;
    Ok(KernelGram::symmetric_from_fn(states.len(), |i, j| {
        states[i].inner(&states[j]).norm_sqr()
    }))
}
