//! Grid densities on `S¹ × [y_min, y_max]` and the Perron–Frobenius operator
//! `Ph(x,y) = (λℓ)^{-1} Σ_k h(x_k, (y − f(x_k))/λ)`, `x_k = (x + k − 1)/ℓ`.
//!
//! Values are cell averages on a uniform `nx × ny` grid. The pullback reads
//! each input column as the piecewise-linear interpolant through the cell
//! centres (flat on the two outer half cells, zero beyond), interpolates
//! linearly between columns in `x`, and integrates exactly over every output
//! cell in `y`. The discrete operator is positive, and it conserves mass up
//! to rounding whenever the output window covers `T` of the input window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::SystemParams;
use crate::error::{Error, Result};

/// Density on a cell-centred grid; `values[ix * ny + iy]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub nx: usize,
    pub ny: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub values: Vec<f64>,
}

/// The fibre window used for densities: `[−(1.01)β, (1.01)β]` with
/// `β = sup|f|/(1−λ)` (see [`SystemParams::fiber_radius`]).
pub fn density_window(params: &SystemParams) -> (f64, f64) {
    let beta = params.fiber_radius();
    let eps = 0.01 * beta;
    (-beta - eps, beta + eps)
}

impl DensityField {
    pub fn zeros(nx: usize, ny: usize, y_min: f64, y_max: f64) -> Self {
        assert!(nx > 0 && ny > 0 && y_max > y_min);
        Self { nx, ny, y_min, y_max, values: vec![0.0; nx * ny] }
    }

    /// Samples `g` at the cell centres.
    pub fn from_fn(nx: usize, ny: usize, y_min: f64, y_max: f64, g: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let mut d = Self::zeros(nx, ny, y_min, y_max);
        let (dx, dy) = (d.dx(), d.dy());
        d.values.par_chunks_mut(ny).enumerate().for_each(|(ix, col)| {
            let x = (ix as f64 + 0.5) * dx;
            for (iy, v) in col.iter_mut().enumerate() {
                *v = g(x, y_min + (iy as f64 + 0.5) * dy);
            }
        });
        d
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.y_min == other.y_min && self.y_max == other.y_max
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn x_center(&self, ix: usize) -> f64 {
        (ix as f64 + 0.5) * self.dx()
    }

    pub fn y_center(&self, iy: usize) -> f64 {
        self.y_min + (iy as f64 + 0.5) * self.dy()
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ny + iy]
    }

    pub fn column(&self, ix: usize) -> &[f64] {
        &self.values[ix * self.ny..(ix + 1) * self.ny]
    }

    fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// `∫ h`, summed column by column in a fixed order.
    pub fn mass(&self) -> f64 {
        let cols: Vec<f64> = self.values.par_chunks(self.ny).map(|c| c.iter().sum::<f64>()).collect();
        cols.iter().sum::<f64>() * self.cell_area()
    }

    pub fn l1_norm(&self) -> f64 {
        let cols: Vec<f64> = self.values.par_chunks(self.ny).map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).collect();
        cols.iter().sum::<f64>() * self.cell_area()
    }

    /// `∫ |h − g|` on a shared grid.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        assert!(self.same_grid(other), "grids differ");
        let cols: Vec<f64> = self
            .values
            .par_chunks(self.ny)
            .zip(other.values.par_chunks(self.ny))
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum::<f64>())
            .collect();
        cols.iter().sum::<f64>() * self.cell_area()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// Rescales to unit mass.
    pub fn normalize(&mut self) {
        let m = self.mass();
        if m != 0.0 {
            self.scale(1.0 / m);
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mass carried by cells whose centre has `|y| > bound`.
    pub fn mass_outside(&self, bound: f64) -> f64 {
        let mut m = 0.0;
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                if self.y_center(iy).abs() > bound {
                    m += self.get(ix, iy).abs();
                }
            }
        }
        m * self.cell_area()
    }

    /// Averages `factor × factor` blocks onto a coarser grid.
    pub fn coarsen(&self, factor: usize) -> Self {
        assert!(self.nx % factor == 0 && self.ny % factor == 0, "grid not divisible by {factor}");
        let (nx, ny) = (self.nx / factor, self.ny / factor);
        let mut out = Self::zeros(nx, ny, self.y_min, self.y_max);
        let w = 1.0 / (factor * factor) as f64;
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                out.values[(ix / factor) * ny + iy / factor] += w * self.get(ix, iy);
            }
        }
        out
    }
}

/// Antiderivative of one column's interpolant, `A(u) = ∫_{y_min}^u H`.
struct ColumnPrimitive<'a> {
    v: &'a [f64],
    knots: Vec<f64>,
    y_min: f64,
    y_max: f64,
    c0: f64,
    dy: f64,
    total: f64,
}

impl<'a> ColumnPrimitive<'a> {
    fn new(v: &'a [f64], y_min: f64, dy: f64) -> Self {
        let n = v.len();
        let mut knots = Vec::with_capacity(n);
        let mut acc = 0.5 * dy * v[0];
        knots.push(acc);
        for j in 1..n {
            acc += 0.5 * dy * (v[j - 1] + v[j]);
            knots.push(acc);
        }
        let total = acc + 0.5 * dy * v[n - 1];
        Self { v, knots, y_min, y_max: y_min + dy * n as f64, c0: y_min + 0.5 * dy, dy, total }
    }

    fn at(&self, u: f64) -> f64 {
        if u <= self.y_min {
            return 0.0;
        }
        if u >= self.y_max {
            return self.total;
        }
        let n = self.v.len();
        let t = (u - self.c0) / self.dy;
        if t < 0.0 {
            return (u - self.y_min) * self.v[0];
        }
        let j = t.floor() as usize;
        if j >= n - 1 {
            return self.knots[n - 1] + (u - self.c0 - (n - 1) as f64 * self.dy) * self.v[n - 1];
        }
        let s = t - j as f64;
        self.knots[j] + self.dy * s * (self.v[j] + 0.5 * (self.v[j + 1] - self.v[j]) * s)
    }
}

/// Result of one application of `P`.
#[derive(Clone, Debug)]
pub struct Applied {
    pub field: DensityField,
    /// Input mass that the output window failed to receive.
    pub leaked: f64,
}

impl Applied {
    pub fn leaking(&self) -> bool {
        self.leaked > 1e-12 * self.field.l1_norm().max(1e-300)
    }
}

/// One application of the Perron–Frobenius operator on the input's grid.
pub fn apply_p(params: &SystemParams, h: &DensityField) -> Applied {
    let (nx, ny) = (h.nx, h.ny);
    let (dy, l, lambda) = (h.dy(), params.lap as f64, params.lambda);
    let prims: Vec<ColumnPrimitive> = (0..nx).map(|ix| ColumnPrimitive::new(h.column(ix), h.y_min, dy)).collect();
    let edges: Vec<f64> = (0..=ny).map(|j| h.y_min + dy * j as f64).collect();
    let scale = 1.0 / (l * dy);
    let mut out = DensityField::zeros(nx, ny, h.y_min, h.y_max);
    let leaks: Vec<f64> = out
        .values
        .par_chunks_mut(ny)
        .enumerate()
        .map(|(ix, col)| {
            let x = (ix as f64 + 0.5) / nx as f64;
            let mut leaked = 0.0;
            for k in 0..params.lap {
                let xk = (x + k as f64) / l;
                let shift = params.f.eval(xk);
                let xi = xk * nx as f64 - 0.5;
                let base = xi.floor();
                let w = xi - base;
                let i0 = (base as i64).rem_euclid(nx as i64) as usize;
                let i1 = (i0 + 1) % nx;
                let (p0, p1) = (&prims[i0], &prims[i1]);
                let read = |u: f64| (1.0 - w) * p0.at(u) + w * p1.at(u);
                let lo = read((edges[0] - shift) / lambda);
                let mut prev = lo;
                for j in 0..ny {
                    let a = read((edges[j + 1] - shift) / lambda);
                    col[j] += (a - prev) * scale;
                    prev = a;
                }
                let covered = prev - lo;
                leaked += ((1.0 - w) * p0.total + w * p1.total - covered) / l;
            }
            leaked
        })
        .collect();
    let leaked = leaks.iter().sum::<f64>() / nx as f64;
    Applied { field: out, leaked }
}

/// `C^∞` bump `exp(1 − 1/(1 − t²))` on `|t| < 1`, equal to 1 at 0.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Default starting density `Ψ₀`: smooth, positive in the interior of the
/// window's central half, unit mass.
pub fn initial_density(nx: usize, ny: usize, y_min: f64, y_max: f64) -> DensityField {
    let mid = 0.5 * (y_min + y_max);
    let half = 0.5 * (y_max - y_min);
    let mut d = DensityField::from_fn(nx, ny, y_min, y_max, |x, y| {
        (1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos()) * bump((y - mid) / (0.5 * half))
    });
    d.normalize();
    d
}

/// Fixed-point iteration for the SBR density.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SbrResult {
    pub density: DensityField,
    pub iterations: usize,
    pub converged: bool,
    /// L¹ distance between consecutive iterates.
    pub history: Vec<f64>,
}

/// Iterates `Ψ_{n+1} = PΨ_n` from [`initial_density`] until consecutive
/// iterates are within `tol` in L¹ or `iters` steps have run.
pub fn sbr_density(params: &SystemParams, nx: usize, ny: usize, iters: usize, tol: f64) -> SbrResult {
    let (y_min, y_max) = density_window(params);
    sbr_density_from(params, initial_density(nx, ny, y_min, y_max), iters, tol)
}

pub fn sbr_density_from(params: &SystemParams, start: DensityField, iters: usize, tol: f64) -> SbrResult {
    let mut psi = start;
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..iters {
        let next = apply_p(params, &psi).field;
        let diff = next.l1_distance(&psi);
        history.push(diff);
        psi = next;
        if diff < tol {
            converged = true;
            break;
        }
    }
    psi.normalize();
    SbrResult { iterations: history.len(), density: psi, converged, history }
}

/// Histogram density estimate of sample points on the field's grid.
pub fn histogram(template: &DensityField, points: impl IntoIterator<Item = (f64, f64)>) -> Result<DensityField> {
    let mut d = DensityField::zeros(template.nx, template.ny, template.y_min, template.y_max);
    let (dy, nx, ny) = (d.dy(), d.nx, d.ny);
    let mut n = 0u64;
    let mut outside = 0u64;
    for (x, y) in points {
        n += 1;
        let iy = ((y - d.y_min) / dy).floor();
        if iy < 0.0 || iy >= ny as f64 {
            outside += 1;
            continue;
        }
        let ix = ((x * nx as f64).floor() as usize).min(nx - 1);
        d.values[ix * ny + iy as usize] += 1.0;
    }
    if n == 0 {
        return Err(Error::InvalidParam("empty sample".into()));
    }
    if outside > 0 {
        return Err(Error::SupportViolation { mass: outside as f64 / n as f64 });
    }
    let s = 1.0 / (n as f64 * d.cell_area());
    d.scale(s);
    Ok(d)
}
