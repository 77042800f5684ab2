//! PCA for very wide matrices.
//!
//! With fewer samples than features the covariance matrix is never formed:
//! the eigenvectors of the `S x S` Gram matrix of centred rows are mapped back
//! to feature space (snapshot method).

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, FeatureMatrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub k: usize,
    pub n_features: usize,
    pub mean: Vec<f64>,
    /// Eigenvalues of the population covariance, descending.
    pub eigenvalues: Vec<f64>,
    /// `k x n_features`, row-major, orthonormal rows.
    pub components: Vec<f64>,
}

impl PcaModel {
    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

fn centered(x: &FeatureMatrix) -> (Vec<f64>, Vec<f64>) {
    let (s, d) = (x.rows(), x.cols());
    let mut mean = vec![0.0; d];
    for row in x.row_iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= s as f64);
    let mut data = x.values().to_vec();
    data.par_chunks_mut(d.max(1)).for_each(|row| {
        for (v, m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    });
    (mean, data)
}

/// Eigenpairs sorted by descending eigenvalue.
fn sorted_eigen(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, 1e-14, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Orthonormal vector orthogonal to `basis`, found by Gram-Schmidt on the
/// standard basis. Used for null-space directions where back-projection
/// yields nothing.
fn complete_basis(basis: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut best = (0.0, vec![0.0; d]);
    for e in 0..d {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > best.0 {
            best = (norm, v);
            if norm > 0.5 {
                break;
            }
        }
    }
    let mut v = best.1;
    normalize(&mut v);
    v
}

/// Sign convention: the largest-magnitude coordinate is positive (first one
/// on ties).
fn fix_sign(v: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Which eigenproblem [`pca_fit_with`] solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PcaMethod {
    /// Gram matrix when samples < features, covariance otherwise.
    #[default]
    Auto,
    Gram,
    Covariance,
}

pub fn pca_fit(x: &FeatureMatrix, k: usize) -> Result<PcaModel> {
    pca_fit_with(x, k, PcaMethod::Auto)
}

pub fn pca_fit_with(x: &FeatureMatrix, k: usize, method: PcaMethod) -> Result<PcaModel> {
    let (s, d) = (x.rows(), x.cols());
    if k == 0 || s < 2 || k > (s - 1).min(d) {
        return Err(Error::Shape(format!(
            "PCA dimension {k} must be within 1..={} for {s} samples and {d} features",
            s.saturating_sub(1).min(d)
        )));
    }
    let (mean, data) = centered(x);
    let n = s as f64;

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    let use_gram = match method {
        PcaMethod::Auto => s < d,
        PcaMethod::Gram => true,
        PcaMethod::Covariance => false,
    };
    if use_gram {
        // G = Xc Xc^T; its eigenvectors u map to covariance eigenvectors Xc^T u.
        let gram_rows: Vec<Vec<f64>> = (0..s)
            .into_par_iter()
            .map(|i| {
                let ri = &data[i * d..(i + 1) * d];
                (0..s)
                    .map(|j| {
                        let rj = &data[j * d..(j + 1) * d];
                        ri.iter().zip(rj).map(|(a, b)| a * b).sum()
                    })
                    .collect()
            })
            .collect();
        let gram = DMatrix::from_fn(s, s, |r, c| {
            // exact symmetry regardless of summation order
            if r <= c {
                gram_rows[r][c]
            } else {
                gram_rows[c][r]
            }
        });
        let (values, vectors) = sorted_eigen(gram)?;
        let scale = values[0].abs().max(1.0);
        for c in 0..k {
            let lambda = values[c].max(0.0);
            let mut v = vec![0.0; d];
            if lambda > 1e-12 * scale {
                for i in 0..s {
                    let u = vectors[(i, c)];
                    for (acc, xv) in v.iter_mut().zip(&data[i * d..(i + 1) * d]) {
                        *acc += u * xv;
                    }
                }
                normalize(&mut v);
            } else {
                v = complete_basis(&components, d);
            }
            fix_sign(&mut v);
            components.push(v);
            eigenvalues.push(lambda / n);
        }
    } else {
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for i in 0..s {
            let r = &data[i * d..(i + 1) * d];
            for a in 0..d {
                for b in a..d {
                    cov[(a, b)] += r[a] * r[b];
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let v = cov[(a, b)] / n;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        let (values, vectors) = sorted_eigen(cov)?;
        for c in 0..k {
            let mut v: Vec<f64> = (0..d).map(|r| vectors[(r, c)]).collect();
            normalize(&mut v);
            fix_sign(&mut v);
            components.push(v);
            eigenvalues.push(values[c].max(0.0));
        }
    }

    Ok(PcaModel {
        k,
        n_features: d,
        mean,
        eigenvalues,
        components: components.concat(),
    })
}

/// Projects `(X - mean)` onto the components: an `S x k` matrix.
pub fn pca_transform(model: &PcaModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    x.expect_cols(model.n_features, "pca_transform")?;
    let rows: Vec<Vec<f64>> = x
        .row_iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|row| {
            (0..model.k)
                .map(|c| {
                    model
                        .component(c)
                        .iter()
                        .zip(row.iter().zip(&model.mean))
                        .map(|(w, (v, m))| w * (v - m))
                        .sum()
                })
                .collect()
        })
        .collect();
    FeatureMatrix::new(x.rows(), model.k, rows.concat())
}

/// Maps reduced rows back to feature space.
pub fn pca_inverse(model: &PcaModel, z: &FeatureMatrix) -> Result<FeatureMatrix> {
    z.expect_cols(model.k, "pca_inverse")?;
    let d = model.n_features;
    let mut out = Vec::with_capacity(z.rows() * d);
    for row in z.row_iter() {
        let mut v = model.mean.clone();
        for (c, coef) in row.iter().enumerate() {
            for (acc, w) in v.iter_mut().zip(model.component(c)) {
                *acc += coef * w;
            }
        }
        out.extend(v);
    }
    FeatureMatrix::new(z.rows(), d, out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        FeatureMatrix::new(rows, cols, v).unwrap()
    }

    #[test]
    fn collinear_points_give_diagonal_component() {
        let x = FeatureMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [-3.0, -3.0]])
            .unwrap();
        let m = pca_fit(&x, 2).unwrap();
        assert!((m.component(0)[0] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((m.component(0)[1] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(m.eigenvalues[1] < 1e-10);
    }

    #[test]
    fn full_basis_reconstructs_exactly() {
        let x = random_matrix(12, 5, 1);
        let m = pca_fit(&x, 5).unwrap();
        let back = pca_inverse(&m, &pca_transform(&m, &x).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(x.values()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn mean_row_maps_to_zero() {
        let x = random_matrix(6, 30, 2);
        let m = pca_fit(&x, 3).unwrap();
        let mean = FeatureMatrix::new(1, 30, m.mean.clone()).unwrap();
        let z = pca_transform(&m, &mean).unwrap();
        assert!(z.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gram_route_has_orthonormal_components_and_matching_variance() {
        let x = random_matrix(15, 60, 3);
        let m = pca_fit(&x, 14).unwrap();
        for i in 0..m.k {
            for j in 0..m.k {
                let dot: f64 = m.component(i).iter().zip(m.component(j)).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((dot - target).abs() < 1e-8, "<c{i}, c{j}> = {dot}");
            }
        }
        let z = pca_transform(&m, &x).unwrap();
        for c in 0..m.k {
            let col = z.column(c);
            let var = col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64;
            assert!((var - m.eigenvalues[c]).abs() < 1e-6);
        }
        assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_deficient_gram_still_orthonormal() {
        // 6 samples in a 2-D subspace of 20 features; k = 4 reaches the null space
        let base = random_matrix(6, 2, 5);
        let lift = random_matrix(2, 20, 6);
        let rows: Vec<Vec<f64>> = base
            .row_iter()
            .map(|r| (0..20).map(|f| r[0] * lift.get(0, f) + r[1] * lift.get(1, f)).collect())
            .collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let m = pca_fit(&x, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = m.component(i).iter().zip(m.component(j)).map(|(a, b)| a * b).sum();
                assert!((dot - f64::from(u8::from(i == j))).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn k_out_of_range() {
        let x = random_matrix(5, 3, 4);
        assert!(matches!(pca_fit(&x, 0), Err(Error::Shape(_))));
        assert!(matches!(pca_fit(&x, 4), Err(Error::Shape(_))));
        let m = pca_fit(&x, 2).unwrap();
        assert!(matches!(
            pca_transform(&m, &random_matrix(2, 4, 0)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn captured_variance_grows_with_k() {
        let x = random_matrix(10, 40, 8);
        let total: f64 = (0..40)
            .map(|c| {
                let col = x.column(c);
                let m = col.iter().sum::<f64>() / 10.0;
                col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 10.0
            })
            .sum();
        let mut prev = 0.0;
        for k in 1..=9 {
            let captured: f64 = pca_fit(&x, k).unwrap().eigenvalues.iter().sum();
            assert!(captured >= prev - 1e-12 && captured <= total + 1e-9);
            prev = captured;
        }
    }
}
