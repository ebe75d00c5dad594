//! Finite surrogate of the curve-integral norm
//! `max_{α+β≤ρ} sup_γ sup_φ ∫ φ(t) ∂^α_x ∂^β_y h(γ(t)) dt` over near-vertical
//! curves `t ↦ (x(t), t)`. Any finite family gives a lower bound.

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::norm::{frequency, PeriodicGrid};
use crate::dynamics::TrigPoly;
use crate::rng;

/// A field with computable partial derivatives.
pub trait SmoothField: Sync {
    fn partial(&self, alpha: u32, beta: u32, x: f64, y: f64) -> f64;
}

/// `h(x, y) = gx(x) · gy(y / period)`.
#[derive(Clone, Debug)]
pub struct Separable {
    pub gx: TrigPoly,
    pub gy: TrigPoly,
    pub period: f64,
}

impl SmoothField for Separable {
    fn partial(&self, alpha: u32, beta: u32, x: f64, y: f64) -> f64 {
        self.gx.eval_deriv(alpha, x) * self.gy.eval_deriv(beta, y / self.period) * self.period.powi(-(beta as i32))
    }
}

/// Spectrally differentiated grid data, evaluated by bilinear interpolation.
pub struct SpectralField {
    grid: PeriodicGrid,
    partials: BTreeMap<(u32, u32), Vec<f64>>,
}

impl SpectralField {
    /// Precomputes all partials with `α + β ≤ rho`.
    pub fn new(grid: PeriodicGrid, rho: u32) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut planner = FftPlanner::<f64>::new();
        let (fx, fy) = (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny));
        let (ix_, iy_) = (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny));
        let mut spec: Vec<Complex64> = grid.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut spec, nx, ny, &*fx, &*fy);
        let half = grid.half_period();
        let mut partials = BTreeMap::new();
        for alpha in 0..=rho {
            for beta in 0..=rho - alpha {
                let mut d = spec.clone();
                for kx in 0..nx {
                    let xi = if nx % 2 == 0 && kx == nx / 2 && alpha % 2 == 1 { 0.0 } else { frequency(kx, nx) };
                    for ky in 0..ny {
                        let eta = if ny % 2 == 0 && ky == ny / 2 && beta % 2 == 1 {
                            0.0
                        } else {
                            std::f64::consts::PI * frequency(ky, ny) / half
                        };
                        let m = Complex64::new(0.0, TAU * xi).powu(alpha) * Complex64::new(0.0, eta).powu(beta);
                        d[kx * ny + ky] *= m;
                    }
                }
                fft2(&mut d, nx, ny, &*ix_, &*iy_);
                let scale = 1.0 / (nx * ny) as f64;
                partials.insert((alpha, beta), d.iter().map(|c| c.re * scale).collect());
            }
        }
        Self { grid, partials }
    }
}

fn fft2(data: &mut [Complex64], nx: usize, ny: usize, fx: &dyn rustfft::Fft<f64>, fy: &dyn rustfft::Fft<f64>) {
    data.par_chunks_mut(ny).for_each(|col| fy.process(col));
    let mut row = vec![Complex64::new(0.0, 0.0); nx];
    for iy in 0..ny {
        for ix in 0..nx {
            row[ix] = data[ix * ny + iy];
        }
        fx.process(&mut row);
        for ix in 0..nx {
            data[ix * ny + iy] = row[ix];
        }
    }
}

impl SmoothField for SpectralField {
    fn partial(&self, alpha: u32, beta: u32, x: f64, y: f64) -> f64 {
        let Some(v) = self.partials.get(&(alpha, beta)) else {
            return f64::NAN;
        };
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let u = ((x - g.x0) * nx as f64).rem_euclid(nx as f64);
        let w = ((y - g.y0) / g.dy).rem_euclid(ny as f64);
        let (i0, j0) = (u.floor() as usize % nx, w.floor() as usize % ny);
        let (i1, j1) = ((i0 + 1) % nx, (j0 + 1) % ny);
        let (a, b) = (u - u.floor(), w - w.floor());
        let at = |i: usize, j: usize| v[i * ny + j];
        (1.0 - a) * ((1.0 - b) * at(i0, j0) + b * at(i0, j1)) + a * ((1.0 - b) * at(i1, j0) + b * at(i1, j1))
    }
}

/// Polynomial in monomial basis, lowest degree first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn deriv(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly(vec![]);
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn chebyshev(j: usize) -> Poly {
        let (mut a, mut b) = (Poly(vec![1.0]), Poly(vec![0.0, 1.0]));
        if j == 0 {
            return a;
        }
        for _ in 1..j {
            let mut c = Poly(vec![0.0, 2.0]).mul(&b);
            for (k, v) in a.0.iter().enumerate() {
                c.0[k] -= v;
            }
            a = b;
            b = c;
        }
        b
    }

    /// Upper bound of `sup_{[−1,1]} |p|`: grid maximum inflated by the
    /// Markov inequality `sup|p'| ≤ d² sup|p|`.
    pub fn sup_bound(&self) -> f64 {
        let n = 4096;
        let h = 2.0 / n as f64;
        let grid = (0..=n).map(|i| self.eval(-1.0 + i as f64 * h).abs()).fold(0.0, f64::max);
        let d = self.degree() as f64;
        grid / (1.0 - 0.5 * h * d * d)
    }
}

/// Curve `t ↦ (x0 + p(t/half), t)` on `t ∈ [−half, half]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Curve {
    pub x0: f64,
    pub profile: Poly,
}

impl Curve {
    pub fn x(&self, t: f64, half: f64) -> f64 {
        self.x0 + self.profile.eval(t / half)
    }

    /// `sup |dᵏx/dtᵏ|` bound for `k = 1..=3`.
    pub fn derivative_bounds(&self, half: f64) -> [f64; 3] {
        let mut p = self.profile.clone();
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            p = p.deriv();
            *o = p.0.iter().map(|c| c.abs()).sum::<f64>() * half.powi(-(k as i32 + 1));
        }
        out
    }
}

/// Test function `T_j(u)(1 − u²)^m / norm` with `u = t/half`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestFunction {
    pub poly: Poly,
}

impl TestFunction {
    /// Normalized so that `max_{k ≤ ⌈s⌉} sup |φ^{(k)}| ≤ 1` in the `t` variable.
    pub fn chebyshev_bump(j: usize, s: f64, half: f64) -> Self {
        let m = s.ceil() as usize + 1;
        let mut p = Poly::chebyshev(j);
        let base = Poly(vec![1.0, 0.0, -1.0]);
        for _ in 0..m {
            p = p.mul(&base);
        }
        let mut norm: f64 = 0.0;
        let mut d = p.clone();
        for k in 0..=s.ceil() as usize {
            norm = norm.max(d.sup_bound() * half.powi(-(k as i32)));
            d = d.deriv();
        }
        Self { poly: Poly(p.0.iter().map(|c| c / norm).collect()) }
    }

    pub fn eval(&self, t: f64, half: f64) -> f64 {
        self.poly.eval(t / half)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveFamily {
    /// Curves live on `y ∈ [−half, half]`.
    pub half: f64,
    pub slope_bound: f64,
    /// Bounds on the second and third derivatives.
    pub c: [f64; 2],
    pub curves: Vec<Curve>,
    pub tests: Vec<TestFunction>,
    /// Simpson nodes per curve (odd).
    pub nodes: usize,
}

impl CurveFamily {
    /// Seeded family of `count` cubic curves with slope bound `1/alpha0`
    /// and `tests` Chebyshev bumps.
    pub fn generate(alpha0: f64, half: f64, s: f64, count: usize, tests: usize, seed: u64) -> Self {
        let slope_bound = 1.0 / alpha0;
        let c = [1.0, 1.0];
        let curves = (0..count)
            .map(|i| {
                let mut r = rng::stream(seed, 0xc0e, i as u64);
                let mut profile = Poly((0..4).map(|k| if k == 0 { 0.0 } else { r.gen::<f64>() * 2.0 - 1.0 }).collect());
                let curve = Curve { x0: (i as f64 + r.gen::<f64>()) / count as f64, profile: profile.clone() };
                let b = curve.derivative_bounds(half);
                let shrink = [slope_bound / b[0], c[0] / b[1], c[1] / b[2]]
                    .iter()
                    .fold(1.0f64, |acc, &v| if v.is_finite() { acc.min(v) } else { acc });
                profile.0.iter_mut().for_each(|v| *v *= shrink);
                Curve { profile, ..curve }
            })
            .collect();
        let tests = (0..tests).map(|j| TestFunction::chebyshev_bump(j, s, half)).collect();
        Self { half, slope_bound, c, curves, tests, nodes: 513 }
    }

    /// Vertical lines `x = x0` for the given abscissae.
    pub fn vertical(xs: &[f64], half: f64, s: f64, tests: usize) -> Self {
        let curves = xs.iter().map(|&x0| Curve { x0, profile: Poly(vec![0.0]) }).collect();
        let tests = (0..tests).map(|j| TestFunction::chebyshev_bump(j, s, half)).collect();
        Self { half, slope_bound: 0.0, c: [0.0, 0.0], curves, tests, nodes: 513 }
    }

    /// Every curve meets the slope and curvature bounds.
    pub fn admissible(&self, alpha0: f64) -> bool {
        self.curves.iter().all(|c| {
            let b = c.derivative_bounds(self.half);
            b[0] <= 1.0 / alpha0 * (1.0 + 1e-12) && b[1] <= self.c[0] * (1.0 + 1e-12) && b[2] <= self.c[1] * (1.0 + 1e-12)
        })
    }

    /// `∫ φ(t) ∂^α_x ∂^β_y h(γ(t)) dt` by composite Simpson.
    pub fn integral(&self, h: &dyn SmoothField, curve: &Curve, test: &TestFunction, alpha: u32, beta: u32) -> f64 {
        let n = self.nodes - 1;
        let dt = 2.0 * self.half / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            let t = -self.half + i as f64 * dt;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            total += w * test.eval(t, self.half) * h.partial(alpha, beta, curve.x(t, self.half), t);
        }
        total * dt / 3.0
    }
}

/// Lower bound of the curve-integral norm of order `rho` over `family`.
pub fn dagger_norm_surrogate(h: &dyn SmoothField, rho: u32, family: &CurveFamily) -> f64 {
    let per_curve: Vec<f64> = family
        .curves
        .par_iter()
        .map(|curve| {
            let mut best: f64 = 0.0;
            for alpha in 0..=rho {
                for beta in 0..=rho - alpha {
                    for test in &family.tests {
                        best = best.max(family.integral(h, curve, test, alpha, beta).abs());
                    }
                }
            }
            best
        })
        .collect();
    per_curve.into_iter().fold(0.0, f64::max)
}
