//! Ulam discretization of the transfer operator and a deflated power
//! iteration for its second eigenvalue.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::{density_window, DensityField};
use crate::dynamics::{reduce, SystemParams};
use crate::rng;

const TAG_X: u64 = 0x5a11;
const TAG_V: u64 = 0x5a13;

/// Column-stochastic matrix in compressed sparse row form. State index of
/// cell `(ix, iy)` is `ix * ny + iy`, matching [`DensityField`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UlamOperator {
    pub nx: usize,
    pub ny: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub vals: Vec<f64>,
    /// `max_i |Σ_j M_{ji} − 1|`.
    pub mass_error: f64,
}

/// Stratified sample offsets in `[0, 1)` for `count` strata of one cell
/// column, shared by every cell in that column.
fn strata(seed: u64, tag: u64, cell: usize, count: usize) -> Vec<f64> {
    (0..count)
        .map(|a| {
            let u: f64 = rng::stream(seed, tag, (cell * count + a) as u64).gen();
            (a as f64 + u) / count as f64
        })
        .collect()
}

/// Number of `x` samples per cell: `samples` rounded up to a multiple of
/// `ℓ`, so that each of the `ℓ` image columns receives the same count.
pub fn x_samples(lap: u32, samples: usize) -> usize {
    samples.max(1).div_ceil(lap as usize) * lap as usize
}

impl UlamOperator {
    pub fn dim(&self) -> usize {
        self.nx * self.ny
    }

    pub fn from_triplets(nx: usize, ny: usize, y_min: f64, y_max: f64, mut trip: Vec<(u32, u32, f64)>) -> Self {
        trip.sort_by_key(|t| (t.0, t.1));
        let n = nx * ny;
        let mut row_ptr = vec![0usize; n + 1];
        for t in &trip {
            row_ptr[t.0 as usize + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = trip.iter().map(|t| t.1).collect();
        let vals: Vec<f64> = trip.iter().map(|t| t.2).collect();
        let mut sums = vec![0.0; n];
        for t in &trip {
            sums[t.1 as usize] += t.2;
        }
        let mass_error = sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        Self { nx, ny, y_min, y_max, row_ptr, col_idx, vals, mass_error }
    }

    /// Dense `n × n` matrix, for small grids only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for (r, row) in m.iter_mut().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row[self.col_idx[k] as usize] = self.vals[k];
            }
        }
        m
    }

    /// `M v`, row-parallel with a fixed summation order per row.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .into_par_iter()
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.vals[k] * v[self.col_idx[k] as usize]).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim()];
        for (k, &c) in self.col_idx.iter().enumerate() {
            sums[c as usize] += self.vals[k];
        }
        sums
    }
}

/// Entry `(j, i)` is the fraction of cell `i` that `T` maps into cell `j`.
/// The `x` direction uses stratified samples (shared along each cell
/// column); along the fiber the image of each sampled vertical segment is an
/// interval of length `λ·dy`, and its overlap with the target cells is
/// computed exactly. Image mass outside the window is assigned to the edge
/// cells.
pub fn ulam_build(params: &SystemParams, nx: usize, ny: usize, samples_per_cell: usize, seed: u64) -> UlamOperator {
    assert!(samples_per_cell >= 1);
    let (y_min, y_max) = density_window(params);
    let kx = x_samples(params.lap, samples_per_cell);
    let dy = (y_max - y_min) / ny as f64;
    let lambda = params.lambda;
    let cols: Vec<Vec<(u32, u32, f64)>> = (0..nx * ny)
        .into_par_iter()
        .map(|src| {
            let (ix, iy) = (src / ny, src % ny);
            let xs = strata(seed, TAG_X, ix, kx);
            let lo = y_min + iy as f64 * dy;
            let mut hits: Vec<(u32, f64)> = Vec::with_capacity(3 * kx);
            for &ux in &xs {
                let x = (ix as f64 + ux) / nx as f64;
                let (x1, a) = params.step((x, lo));
                let b = a + lambda * dy;
                let jx = ((reduce(x1) * nx as f64) as usize).min(nx - 1);
                let cell = |y: f64| (((y - y_min) / dy).floor().max(0.0) as usize).min(ny - 1);
                let (j0, j1) = (cell(a), cell(b));
                for jy in j0..=j1 {
                    let top = if jy == ny - 1 { f64::INFINITY } else { y_min + (jy + 1) as f64 * dy };
                    let bottom = if jy == 0 { f64::NEG_INFINITY } else { y_min + jy as f64 * dy };
                    let overlap = (b.min(top) - a.max(bottom)).max(0.0);
                    if overlap > 0.0 {
                        hits.push(((jx * ny + jy) as u32, overlap / (b - a) / kx as f64));
                    }
                }
            }
            hits.sort_unstable_by_key(|h| h.0);
            let mut out: Vec<(u32, u32, f64)> = Vec::new();
            for (row, w) in hits {
                match out.last_mut() {
                    Some(last) if last.0 == row => last.2 += w,
                    _ => out.push((row, src as u32, w)),
                }
            }
            out
        })
        .collect();
    UlamOperator::from_triplets(nx, ny, y_min, y_max, cols.into_iter().flatten().collect())
}

/// Stationary density of an Ulam operator by power iteration from uniform.
pub fn stationary(op: &UlamOperator, iters: usize, tol: f64) -> Vec<f64> {
    let n = op.dim();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..iters {
        let w = op.apply(&v);
        let diff: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = w;
        if diff < tol {
            break;
        }
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Stationary vector reshaped as a unit-mass density field.
pub fn stationary_density(op: &UlamOperator, iters: usize, tol: f64) -> DensityField {
    let v = stationary(op, iters, tol);
    let mut d = DensityField::zeros(op.nx, op.ny, op.y_min, op.y_max);
    d.values = v;
    d.normalize();
    d
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenEstimate {
    /// Estimated `|μ₂|`, clamped to `[0, 1]`.
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Windowed estimates, one per completed window.
    pub history: Vec<f64>,
}

/// Power iteration on the mass-zero subspace. Each iterate is re-projected
/// by subtracting its mass times the stationary density, and `|μ₂|` is the
/// geometric mean growth over windows of 20 steps (robust to complex pairs).
pub fn second_eigenvalue(op: &UlamOperator, iters: usize, seed: u64) -> EigenEstimate {
    const WINDOW: usize = 20;
    let n = op.dim();
    let pi = stationary(op, 20 * iters.max(50), 1e-14);
    let mut r = rng::stream(seed, TAG_V, 0);
    let mut v: Vec<f64> = (0..n).map(|_| r.gen::<f64>() - 0.5).collect();
    let project = |v: &mut Vec<f64>| {
        let m: f64 = v.iter().sum();
        v.iter_mut().zip(&pi).for_each(|(x, p)| *x -= m * p);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        norm
    };
    let mut norm = project(&mut v);
    v.iter_mut().for_each(|x| *x /= norm);
    let mut history = Vec::new();
    let mut log_growth = 0.0;
    let mut converged = false;
    let mut done = 0;
    for it in 1..=iters {
        let mut w = op.apply(&v);
        norm = project(&mut w);
        done = it;
        if norm == 0.0 || !norm.is_finite() {
            history.push(0.0);
            converged = true;
            break;
        }
        log_growth += norm.ln();
        w.iter_mut().for_each(|x| *x /= norm);
        v = w;
        if it % WINDOW == 0 {
            let est = (log_growth / WINDOW as f64).exp();
            log_growth = 0.0;
            if let Some(&prev) = history.last() {
                let prev: f64 = prev;
                if (est - prev).abs() <= 1e-6 * prev.max(1e-12) {
                    history.push(est);
                    converged = true;
                    break;
                }
            }
            history.push(est);
        }
    }
    let value = history.last().copied().unwrap_or(0.0).clamp(0.0, 1.0);
    EigenEstimate { value, converged, iterations: done, history }
}
