use std::cmp::Ordering;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::qubo::{qubo_energy, QuboMatrix};
use crate::{Error, Result};

/// Largest instance enumerated by [`solve_exhaustive`].
pub const EXHAUSTIVE_MAX: usize = 25;

/// Gray-code steps between exact energy resynchronisations.
const RESYNC_PERIOD: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Exhaustive,
    BranchBound,
    Sa,
}

/// A bitstring with its QUBO energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySolution {
    pub bits: Vec<bool>,
    pub energy: f64,
    pub solver: SolverKind,
    pub seed: Option<u64>,
}

impl BinarySolution {
    pub fn selected(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Anything that turns a QUBO into a bitstring.
pub trait QuboSampler: Sync {
    fn sample(&self, q: &QuboMatrix) -> Result<BinarySolution>;
}

/// Energy tolerance under which two solutions count as tied.
fn tie_tolerance(q: &QuboMatrix) -> f64 {
    1e-11 * (1.0 + q.magnitude())
}

/// Tie-break among equal energies: fewer set bits, then the smaller integer with
/// bit `i` worth `2^i`.
fn tie_break(a: &[bool], b: &[bool]) -> Ordering {
    let count = |w: &[bool]| w.iter().filter(|&&x| x).count();
    count(a).cmp(&count(b)).then_with(|| {
        for i in (0..a.len()).rev() {
            match (a[i], b[i]) {
                (false, true) => return Ordering::Less,
                (true, false) => return Ordering::Greater,
                _ => {}
            }
        }
        Ordering::Equal
    })
}

/// Whether `(e, w)` should replace the incumbent `(best_e, best_w)`.
fn improves(e: f64, w: &[bool], best_e: f64, best_w: &[bool], tol: f64) -> bool {
    if e < best_e - tol {
        true
    } else if e > best_e + tol {
        false
    } else {
        tie_break(w, best_w) == Ordering::Less
    }
}

/// Global minimum by Gray-code enumeration of all `2^N` bitstrings.
pub fn solve_exhaustive(q: &QuboMatrix) -> Result<BinarySolution> {
    let n = q.dim();
    if n > EXHAUSTIVE_MAX {
        return Err(Error::Capacity(format!(
            "exhaustive search is capped at {EXHAUSTIVE_MAX} variables, got {n}"
        )));
    }
    let tol = tie_tolerance(q);
    let mut w = vec![false; n];
    let mut field = vec![0.0; n];
    let mut energy = 0.0;
    let mut best_code = 0u64;
    let mut best_e = 0.0;
    let mut best_count = 0u32;
    let mut code = 0u64;

    let total = 1u64 << n;
    for step in 1..total {
        let k = step.trailing_zeros() as usize;
        energy += q.flip_delta(k, w[k], field[k]);
        let sign = if w[k] { -1.0 } else { 1.0 };
        w[k] = !w[k];
        code ^= 1 << k;
        for j in 0..n {
            if j != k {
                field[j] += sign * q.coupling(k, j);
            }
        }
        if step % RESYNC_PERIOD == 0 {
            energy = qubo_energy(q, &w)?;
            field = q.fields(&w);
        }
        let better = if energy < best_e - tol {
            true
        } else if energy > best_e + tol {
            false
        } else {
            let count = code.count_ones();
            count < best_count || (count == best_count && code < best_code)
        };
        if better {
            best_e = energy;
            best_code = code;
            best_count = code.count_ones();
        }
    }

    let bits: Vec<bool> = (0..n).map(|i| best_code >> i & 1 == 1).collect();
    Ok(BinarySolution {
        energy: qubo_energy(q, &bits)?,
        bits,
        solver: SolverKind::Exhaustive,
        seed: None,
    })
}

/// Simulated-annealing settings. `None` temperatures are calibrated from the
/// instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaParams {
    pub sweeps: usize,
    pub restarts: usize,
    pub beta_initial: Option<f64>,
    pub beta_final: Option<f64>,
    /// Temperature ratio between consecutive schedule levels.
    pub factor: f64,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            restarts: 20,
            beta_initial: None,
            beta_final: None,
            factor: 0.95,
        }
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.restarts == 0 {
            return Err(Error::Config("annealing needs at least one sweep and one restart".into()));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::Config(format!(
                "geometric factor {} must lie in (0, 1)",
                self.factor
            )));
        }
        for b in [self.beta_initial, self.beta_final].into_iter().flatten() {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::Config(format!("inverse temperature {b} must be positive")));
            }
        }
        if let (Some(a), Some(b)) = (self.beta_initial, self.beta_final) {
            if b < a {
                return Err(Error::Config("beta_final must not be below beta_initial".into()));
            }
        }
        Ok(())
    }
}

/// Uphill flip energies of 100 random single flips from random states.
fn sample_uphill(q: &QuboMatrix, seed: u64) -> Vec<f64> {
    let n = q.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut up = Vec::new();
    for _ in 0..100 {
        let w: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let k = rng.random_range(0..n);
        let field: f64 = (0..n).filter(|&j| j != k && w[j]).map(|j| q.coupling(k, j)).sum();
        let d = q.flip_delta(k, w[k], field);
        if d > 0.0 {
            up.push(d);
        }
    }
    up.sort_by(f64::total_cmp);
    up
}

/// `(beta_initial, beta_final)`: initial uphill acceptance near 0.8, final
/// acceptance of the 10th-percentile uphill move near 1e-3.
fn calibrate(q: &QuboMatrix, params: &SaParams, seed: u64) -> (f64, f64) {
    let up = sample_uphill(q, seed);
    let (mean, low) = if up.is_empty() {
        let scale = (q.magnitude() / (q.dim() as f64)).max(1e-12);
        (scale, scale)
    } else {
        let mean = up.iter().sum::<f64>() / up.len() as f64;
        (mean, up[up.len() / 10].max(1e-12))
    };
    let bi = params.beta_initial.unwrap_or(-(0.8f64.ln()) / mean);
    let bf = params.beta_final.unwrap_or((1000f64).ln() / low).max(bi);
    (bi, bf)
}

struct Run {
    bits: Vec<bool>,
    energy: f64,
}

fn anneal_once(q: &QuboMatrix, params: &SaParams, betas: (f64, f64), seed: u64) -> Run {
    let n = q.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let mut field = q.fields(&w);
    let mut energy = qubo_energy(q, &w).expect("dimension checked");
    let mut best = Run {
        bits: w.clone(),
        energy,
    };

    let (bi, bf) = betas;
    let levels = if bf > bi {
        ((bf / bi).ln() / -params.factor.ln()).ceil().max(1.0) as usize
    } else {
        1
    };

    let flip = |k: usize, w: &mut Vec<bool>, field: &mut Vec<f64>| {
        let sign = if w[k] { -1.0 } else { 1.0 };
        w[k] = !w[k];
        for j in 0..n {
            if j != k {
                field[j] += sign * q.coupling(k, j);
            }
        }
    };

    for sweep in 0..params.sweeps {
        let level = (sweep * levels / params.sweeps).min(levels - 1);
        let beta = (bi / params.factor.powi(level as i32)).min(bf);
        for k in 0..n {
            let d = q.flip_delta(k, w[k], field[k]);
            if d <= 0.0 || rng.random::<f64>() < (-beta * d).exp() {
                flip(k, &mut w, &mut field);
                energy += d;
                if energy < best.energy {
                    best.energy = energy;
                    best.bits.clone_from(&w);
                }
            }
        }
    }

    // greedy descent from the best state seen
    let mut w = best.bits.clone();
    let mut field = q.fields(&w);
    loop {
        let mut moved = false;
        for k in 0..n {
            if q.flip_delta(k, w[k], field[k]) < 0.0 {
                flip(k, &mut w, &mut field);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let energy = qubo_energy(q, &w).expect("dimension checked");
    if energy <= best.energy {
        best = Run { bits: w, energy };
    } else {
        best.energy = qubo_energy(q, &best.bits).expect("dimension checked");
    }
    best
}

/// Best of `restarts` independent annealing runs; restart `r` uses seed
/// `seed + r`.
pub fn solve_sa(q: &QuboMatrix, params: &SaParams, seed: u64) -> Result<BinarySolution> {
    params.validate()?;
    if q.dim() == 0 {
        return Err(Error::Config("cannot anneal an empty QUBO".into()));
    }
    let betas = calibrate(q, params, seed);
    let runs: Vec<Run> = (0..params.restarts)
        .into_par_iter()
        .map(|r| anneal_once(q, params, betas, seed.wrapping_add(r as u64)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.energy < a.energy { b } else { a })
        .expect("at least one restart");
    Ok(BinarySolution {
        bits: best.bits,
        energy: best.energy,
        solver: SolverKind::Sa,
        seed: Some(seed),
    })
}

/// Convex reformulation `f(w) = w^T A w + b^T w`, equal to the QUBO energy on
/// binary points, with `A` shifted to be positive semidefinite.
struct Convexified {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Convexified {
    fn new(q: &QuboMatrix) -> Self {
        let n = q.dim();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                m[(i, j)] = q.get(i, j) / 2.0;
                m[(j, i)] = q.get(i, j) / 2.0;
            }
        }
        let min_eig = if n > 1 { m.clone().symmetric_eigenvalues().min() } else { 0.0 };
        let shift = (-min_eig).max(0.0) * (1.0 + 1e-9) + 1e-12;
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = m[(i, j)];
            }
            a[i * n + i] = shift;
            b[i] = q.get(i, i) - shift;
        }
        Self { n, a, b }
    }

    /// Lower bound of `f` over the box with the `fixed` variables pinned.
    /// Coordinate descent on the relaxation, then the Frank-Wolfe gap.
    fn bound(&self, fixed: &[Option<bool>], x: &mut [f64]) -> f64 {
        let n = self.n;
        for (xi, f) in x.iter_mut().zip(fixed) {
            if let Some(v) = f {
                *xi = if *v { 1.0 } else { 0.0 };
            }
        }
        // g_i = 2 (A x)_i + b_i
        let mut ax: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| self.a[i * n + j] * x[j]).sum())
            .collect();
        for _ in 0..60 {
            let mut moved: f64 = 0.0;
            for i in 0..n {
                if fixed[i].is_some() {
                    continue;
                }
                let aii = self.a[i * n + i];
                let g = 2.0 * ax[i] + self.b[i];
                let next = (x[i] - g / (2.0 * aii)).clamp(0.0, 1.0);
                let d = next - x[i];
                if d != 0.0 {
                    for (j, axj) in ax.iter_mut().enumerate() {
                        *axj += self.a[j * n + i] * d;
                    }
                    x[i] = next;
                    moved = moved.max(d.abs());
                }
            }
            if moved < 1e-9 {
                break;
            }
        }
        let mut f = 0.0;
        let mut gap = 0.0;
        for i in 0..n {
            f += x[i] * (ax[i] + self.b[i]);
            if fixed[i].is_none() {
                let g = 2.0 * ax[i] + self.b[i];
                gap += (-g * x[i]).min(g * (1.0 - x[i]));
            }
        }
        f + gap
    }
}

/// Exact minimum by depth-first branch and bound over a convex relaxation,
/// with the same tie-break as [`solve_exhaustive`]. Interchangeable variables
/// are ordered so the lower index is set first.
pub fn solve_branch_bound(q: &QuboMatrix) -> Result<BinarySolution> {
    let n = q.dim();
    if n <= 16 {
        let mut s = solve_exhaustive(q)?;
        s.solver = SolverKind::BranchBound;
        return Ok(s);
    }
    let tol = tie_tolerance(q);
    let cvx = Convexified::new(q);

    // twin[j] = i < j when variables i and j are interchangeable
    let mut twin = vec![None; n];
    for j in 0..n {
        'cand: for i in 0..j {
            if twin[i].is_some() || q.get(i, i) != q.get(j, j) {
                continue;
            }
            for k in 0..n {
                if k != i && k != j && q.coupling(i, k) != q.coupling(j, k) {
                    continue 'cand;
                }
            }
            twin[j] = Some(i);
            break;
        }
    }
    let twin_chain: Vec<Option<usize>> = (0..n)
        .map(|j| {
            // nearest earlier member of the same class
            (0..j).rev().find(|&i| {
                let root = |mut v: usize| {
                    while let Some(p) = twin[v] {
                        v = p;
                    }
                    v
                };
                root(i) == root(j)
            })
        })
        .collect();

    let incumbent = solve_sa(q, &SaParams { restarts: 8, ..SaParams::default() }, 0)?;
    let mut best_w = incumbent.bits;
    let mut best_e = qubo_energy(q, &best_w)?;

    let mut fixed: Vec<Option<bool>> = vec![None; n];
    let mut ones = 0usize;
    let mut x = vec![0.5; n];
    let mut stack: Vec<(usize, bool, Vec<f64>)> = Vec::new();
    if cvx.bound(&fixed, &mut x) <= best_e + tol {
        let first = x[0] >= 0.5;
        stack.push((0, !first, x.clone()));
        stack.push((0, first, x));
    }

    while let Some((depth, value, mut xr)) = stack.pop() {
        for f in &mut fixed[depth..] {
            if f.take() == Some(true) {
                ones -= 1;
            }
        }
        if value {
            if let Some(prev) = twin_chain[depth] {
                if fixed[prev] == Some(false) {
                    continue;
                }
            }
        }
        fixed[depth] = Some(value);
        if value {
            ones += 1;
        }
        if depth + 1 == n {
            let w: Vec<bool> = fixed.iter().map(|f| f == &Some(true)).collect();
            let e = qubo_energy(q, &w)?;
            if improves(e, &w, best_e, &best_w, tol) {
                best_e = e;
                best_w = w;
            }
            continue;
        }
        let bound = cvx.bound(&fixed, &mut xr);
        let best_ones = best_w.iter().filter(|&&b| b).count();
        if bound > best_e + tol || (bound > best_e - tol && ones > best_ones) {
            continue;
        }
        let next = depth + 1;
        let first = xr[next] >= 0.5;
        stack.push((next, !first, xr.clone()));
        stack.push((next, first, xr));
    }

    Ok(BinarySolution {
        energy: qubo_energy(q, &best_w)?,
        bits: best_w,
        solver: SolverKind::BranchBound,
        seed: None,
    })
}

/// Serializable solver choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Solver {
    Exhaustive,
    BranchBound,
    Sa {
        #[serde(default)]
        params: SaParams,
        #[serde(default)]
        seed: u64,
    },
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Exhaustive => "exhaustive",
            Solver::BranchBound => "branch-bound",
            Solver::Sa { .. } => "sa",
        }
    }
}

impl QuboSampler for Solver {
    fn sample(&self, q: &QuboMatrix) -> Result<BinarySolution> {
        match self {
            Solver::Exhaustive => solve_exhaustive(q),
            Solver::BranchBound => solve_branch_bound(q),
            Solver::Sa { params, seed } => solve_sa(q, params, *seed),
        }
    }
}
