use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Label, Result};

/// How the QUBO coefficients are derived from the weak-learner outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuboMode {
    /// Exact expansion of the regularised squared loss, `1/N` factors kept.
    #[default]
    Consistent,
    /// Correlations without the `1/N` factors, diagonal keeps `S/N^2`.
    PaperExact,
}

impl fmt::Display for QuboMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuboMode::Consistent => "consistent",
            QuboMode::PaperExact => "paper-exact",
        })
    }
}

impl FromStr for QuboMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(QuboMode::Consistent),
            "paper-exact" => Ok(QuboMode::PaperExact),
            other => Err(Error::Config(format!("unknown QUBO mode '{other}'"))),
        }
    }
}

/// Upper-triangular QUBO coefficients over `n` binary variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboMatrix {
    n: usize,
    mode: QuboMode,
    lambda: f64,
    /// Dense `n x n`, only `i <= j` entries are used.
    coeffs: Vec<f64>,
}

impl QuboMatrix {
    pub fn zeros(n: usize, mode: QuboMode, lambda: f64) -> Self {
        Self {
            n,
            mode,
            lambda,
            coeffs: vec![0.0; n * n],
        }
    }

    /// From a dense matrix; the lower triangle is folded onto the upper one.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::Shape(format!(
                "{} entries do not form a {n}x{n} matrix",
                dense.len()
            )));
        }
        let mut q = Self::zeros(n, QuboMode::Consistent, 0.0);
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                q.add(i.min(j), i.max(j), v);
            }
        }
        q.check_finite()?;
        Ok(q)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> QuboMode {
        self.mode
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Coefficient `Q_ij` for `i <= j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i <= j);
        self.coeffs[i * self.n + j]
    }

    /// Symmetric view: `Q_min(i,j),max(i,j)`.
    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        if i <= j {
            self.get(i, j)
        } else {
            self.get(j, i)
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i <= j && j < self.n, "({i}, {j}) is not an upper-triangular index");
        self.coeffs[i * self.n + j] = v;
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.coeffs[i * self.n + j] += v;
    }

    fn check_finite(&self) -> Result<()> {
        if self.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Encoding("QUBO has non-finite coefficients".into()));
        }
        Ok(())
    }

    /// Sum of `|Q_ij|`, a scale for tolerances.
    pub fn magnitude(&self) -> f64 {
        self.coeffs.iter().map(|v| v.abs()).sum()
    }

    /// Energy change of flipping bit `k`, given `field[k] = sum_{j != k} Q_kj w_j`.
    #[inline]
    pub(crate) fn flip_delta(&self, k: usize, bit: bool, field: f64) -> f64 {
        let d = self.get(k, k) + field;
        if bit {
            -d
        } else {
            d
        }
    }

    /// `field[k] = sum_{j != k} Q_kj w_j` for every k.
    pub(crate) fn fields(&self, w: &[bool]) -> Vec<f64> {
        (0..self.n)
            .map(|k| {
                (0..self.n)
                    .filter(|&j| j != k && w[j])
                    .map(|j| self.coupling(k, j))
                    .sum()
            })
            .collect()
    }

    /// Text form: `N mode lambda`, then `i j value` per nonzero coefficient.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.mode, self.lambda);
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push_str(&format!("{i} {j} {v}\n"));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Encoding("empty QUBO file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 {
            return Err(Error::Encoding(format!("bad QUBO header '{header}'")));
        }
        let bad = |line: usize, what: &str| Error::Encoding(format!("line {}: {what}", line + 1));
        let n: usize = h[0].parse().map_err(|_| bad(0, "dimension is not an integer"))?;
        let mode: QuboMode = h[1].parse()?;
        let lambda: f64 = h[2].parse().map_err(|_| bad(0, "lambda is not a number"))?;
        let mut q = Self::zeros(n, mode, lambda);
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(bad(ln, "expected 'i j value'"));
            }
            let i: usize = f[0].parse().map_err(|_| bad(ln, "bad row index"))?;
            let j: usize = f[1].parse().map_err(|_| bad(ln, "bad column index"))?;
            let v: f64 = f[2].parse().map_err(|_| bad(ln, "bad value"))?;
            if i > j || j >= n {
                return Err(bad(ln, "index outside the upper triangle"));
            }
            q.set(i, j, v);
        }
        q.check_finite()?;
        Ok(q)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// QUBO over the selection bits of `N` weak learners.
///
/// `h` is the `S x N` matrix of training outputs (row-major, entries +-1).
/// Consistent mode: `Q_ii = S/N^2 + lambda - (2/N) Corr(h_i, y)` and
/// `Q_ij = (2/N^2) Corr(h_i, h_j)`; paper-exact mode drops the `1/N` factors on
/// the correlation terms.
pub fn build_qubo(h: &[Label], samples: usize, y: &[Label], lambda: f64, mode: QuboMode) -> Result<QuboMatrix> {
    if y.len() != samples || samples == 0 || h.len() % samples != 0 {
        return Err(Error::Shape(format!(
            "{} outputs and {} labels do not describe {samples} samples",
            h.len(),
            y.len()
        )));
    }
    if let Some(p) = h.iter().position(|&v| v != 1 && v != -1) {
        return Err(Error::Encoding(format!(
            "weak-learner output {} at position {p} is not +-1",
            h[p]
        )));
    }
    if let Some(p) = y.iter().position(|&v| v != 1 && v != -1) {
        return Err(Error::Encoding(format!("label {} at position {p} is not +-1", y[p])));
    }
    if !lambda.is_finite() {
        return Err(Error::Encoding(format!("lambda {lambda} is not finite")));
    }
    let n = h.len() / samples;
    let (nf, sf) = (n as f64, samples as f64);
    let (corr_y_scale, corr_scale) = match mode {
        QuboMode::Consistent => (2.0 / nf, 2.0 / (nf * nf)),
        QuboMode::PaperExact => (2.0, 2.0),
    };

    let mut corr_y = vec![0i64; n];
    let mut corr = vec![0i64; n * n];
    for s in 0..samples {
        let row = &h[s * n..(s + 1) * n];
        let ys = i64::from(y[s]);
        for i in 0..n {
            let hi = i64::from(row[i]);
            corr_y[i] += hi * ys;
            for j in i + 1..n {
                corr[i * n + j] += hi * i64::from(row[j]);
            }
        }
    }

    let mut q = QuboMatrix::zeros(n, mode, lambda);
    for i in 0..n {
        q.set(i, i, sf / (nf * nf) + lambda - corr_y_scale * corr_y[i] as f64);
        for j in i + 1..n {
            q.set(i, j, corr_scale * corr[i * n + j] as f64);
        }
    }
    Ok(q)
}

/// `sum_{i <= j} Q_ij w_i w_j`.
pub fn qubo_energy(q: &QuboMatrix, w: &[bool]) -> Result<f64> {
    if w.len() != q.dim() {
        return Err(Error::Shape(format!(
            "{} bits for a {}-variable QUBO",
            w.len(),
            q.dim()
        )));
    }
    let on: Vec<usize> = (0..w.len()).filter(|&i| w[i]).collect();
    let mut e = 0.0;
    for (a, &i) in on.iter().enumerate() {
        for &j in &on[a..] {
            e += q.get(i, j);
        }
    }
    Ok(e)
}

/// Smallest `lambda` from which no single learner lowers the energy on its
/// own, `max(0, -min_i Q_ii)` at `lambda = 0`. Below it the optimum selects at
/// least one learner; above it the selection is empty unless some couplings
/// are negative.
pub fn lambda_ceiling(h: &[Label], samples: usize, y: &[Label], mode: QuboMode) -> Result<f64> {
    let q = build_qubo(h, samples, y, 0.0, mode)?;
    let min_diag = (0..q.dim()).map(|i| q.get(i, i)).fold(f64::INFINITY, f64::min);
    Ok((-min_diag).max(0.0))
}
