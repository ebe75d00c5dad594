//! W^s inner products on the cylinder `S¹ × ℝ` by 2-D discrete Fourier
//! transform, with the fiber direction zero-padded to a period `2L`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::transfer::DensityField;
use crate::{Error, Result};

/// Spectral weight of the star part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `((2πξ)² + η²)^s`.
    Homogeneous,
    /// `(1 + (2πξ)² + η²)^s`, monotone in `s`.
    Bessel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub s: f64,
    /// Half-period `L` of the fiber transform.
    pub y_pad: f64,
    /// `(nξ, nη)` sample counts used for function inputs.
    pub modes: (usize, usize),
    pub weighting: Weighting,
}

impl SobolevSpec {
    pub fn new(s: f64, y_pad: f64) -> Self {
        Self { s, y_pad, modes: (64, 256), weighting: Weighting::Homogeneous }
    }

    pub fn with_modes(mut self, nx: usize, ny: usize) -> Self {
        self.modes = (nx, ny);
        self
    }

    pub fn with_weighting(mut self, w: Weighting) -> Self {
        self.weighting = w;
        self
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidParam(format!("s must be ≥ 0, got {}", self.s)));
        }
        if !(self.y_pad > 0.0) {
            return Err(Error::InvalidParam(format!("y_pad must be > 0, got {}", self.y_pad)));
        }
        if self.modes.0 < 2 || self.modes.1 < 2 {
            return Err(Error::InvalidParam("need at least 2 modes per direction".into()));
        }
        Ok(())
    }

    /// Full weight `star(ξ, η) + 1` of the inner product.
    pub fn weight(&self, xi: f64, eta: f64) -> f64 {
        let w = (TAU * xi).powi(2) + eta * eta;
        let star = match self.weighting {
            Weighting::Homogeneous => {
                if self.s == 0.0 {
                    1.0
                } else {
                    w.powf(self.s)
                }
            }
            Weighting::Bessel => (1.0 + w).powf(self.s),
        };
        star + 1.0
    }
}

/// Real samples on a grid periodic in both directions: `nx` points over
/// `[0, 1)` and `ny` points over a fiber period of length `ny · dy`.
#[derive(Clone, Debug)]
pub struct PeriodicGrid {
    pub nx: usize,
    pub ny: usize,
    pub dy: f64,
    /// Coordinates of sample `(0, 0)`.
    pub x0: f64,
    pub y0: f64,
    /// Row-major in x: `values[ix * ny + iy]`.
    pub values: Vec<f64>,
}

impl PeriodicGrid {
    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn half_period(&self) -> f64 {
        0.5 * self.ny as f64 * self.dy
    }

    /// Samples `f` at `x = i/nx`, `y = −L + j·dy` with `dy = 2L/ny`.
    pub fn sample(f: &(dyn Fn(f64, f64) -> f64 + Sync), nx: usize, ny: usize, half: f64) -> Self {
        let dy = 2.0 * half / ny as f64;
        let values = (0..nx * ny)
            .into_par_iter()
            .map(|k| f((k / ny) as f64 / nx as f64, -half + (k % ny) as f64 * dy))
            .collect();
        Self { nx, ny, dy, x0: 0.0, y0: -half, values }
    }

    /// Embeds a density field into a zero-padded fiber period whose half
    /// length is the smallest integer multiple of the field's half window
    /// that reaches `half`, so dyadic refinements share the same period.
    pub fn from_density(h: &DensityField, half: f64) -> Result<Self> {
        let window = 0.5 * (h.y_max - h.y_min);
        let dy = h.dy();
        let dx = h.dx();
        let mut outside = 0.0;
        for iy in 0..h.ny {
            let (lo, hi) = (h.y_min + iy as f64 * dy, h.y_min + (iy + 1) as f64 * dy);
            if lo < -half || hi > half {
                for ix in 0..h.nx {
                    outside += h.get(ix, iy).abs() * dx * dy;
                }
            }
        }
        if outside > 1e-12 {
            return Err(Error::SupportViolation { mass: outside });
        }
        let reps = (half / window).ceil().max(1.0) as usize;
        let ny = h.ny * reps;
        let offset = (ny - h.ny) / 2;
        let mut values = vec![0.0; h.nx * ny];
        for ix in 0..h.nx {
            values[ix * ny + offset..ix * ny + offset + h.ny].copy_from_slice(h.column(ix));
        }
        let y0 = h.y_min + 0.5 * dy - offset as f64 * dy;
        Ok(Self { nx: h.nx, ny, dy, x0: 0.5 * dx, y0, values })
    }

    /// Unnormalized 2-D DFT scaled by the cell area, indexed like `values`.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let (nx, ny) = (self.nx, self.ny);
        let mut planner = FftPlanner::<f64>::new();
        let fy = planner.plan_fft_forward(ny);
        let fx = planner.plan_fft_forward(nx);
        let mut data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        data.par_chunks_mut(ny).for_each(|col| fy.process(col));
        let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
        t.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            for ix in 0..nx {
                row[ix] = data[ix * ny + iy];
            }
            fx.process(row);
        });
        let area = self.dx() * self.dy;
        let mut out = vec![Complex64::new(0.0, 0.0); nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                out[ix * ny + iy] = t[iy * nx + ix] * area;
            }
        }
        out
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.dx() * self.dy
    }

    pub fn l2_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.dx() * self.dy
    }
}

/// Signed frequency of FFT bin `k` out of `n`.
pub fn frequency(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// `Σ_{ξ,k} c₁ conj(c₂) W(ξ, η_k) / (2L)` with `η_k = πk/L`.
fn spectral_pairing(spec: &SobolevSpec, g: &PeriodicGrid, c1: &[Complex64], c2: &[Complex64]) -> f64 {
    let half = g.half_period();
    let ny = g.ny;
    let per_col: Vec<f64> = (0..g.nx)
        .into_par_iter()
        .map(|ix| {
            let xi = frequency(ix, g.nx);
            (0..ny)
                .map(|iy| {
                    let eta = PI * frequency(iy, ny) / half;
                    let k = ix * ny + iy;
                    (c1[k] * c2[k].conj()).re * spec.weight(xi, eta)
                })
                .sum()
        })
        .collect();
    per_col.iter().sum::<f64>() / (2.0 * half)
}

pub fn ws_inner_grid(spec: &SobolevSpec, a: &PeriodicGrid, b: &PeriodicGrid) -> Result<f64> {
    spec.validate()?;
    if a.nx != b.nx || a.ny != b.ny || a.dy != b.dy {
        return Err(Error::InvalidParam("inner product needs matching grids".into()));
    }
    Ok(spectral_pairing(spec, a, &a.spectrum(), &b.spectrum()))
}

pub fn ws_norm_grid(spec: &SobolevSpec, a: &PeriodicGrid) -> Result<f64> {
    spec.validate()?;
    let c = a.spectrum();
    Ok(spectral_pairing(spec, a, &c, &c).max(0.0).sqrt())
}

/// `(h₁, h₂)_{W^s}` for two fields on the same grid, padded to `spec.y_pad`.
pub fn ws_inner(spec: &SobolevSpec, h1: &DensityField, h2: &DensityField) -> Result<f64> {
    if !h1.same_grid(h2) {
        return Err(Error::InvalidParam("inner product needs matching grids".into()));
    }
    ws_inner_grid(spec, &PeriodicGrid::from_density(h1, spec.y_pad)?, &PeriodicGrid::from_density(h2, spec.y_pad)?)
}

pub fn ws_norm(spec: &SobolevSpec, h: &DensityField) -> Result<f64> {
    ws_norm_grid(spec, &PeriodicGrid::from_density(h, spec.y_pad)?)
}

type Field<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

fn sample_checked(spec: &SobolevSpec, f: Field) -> Result<PeriodicGrid> {
    spec.validate()?;
    let g = PeriodicGrid::sample(f, spec.modes.0, spec.modes.1, spec.y_pad);
    let edge: f64 = (0..g.nx).map(|ix| g.values[ix * g.ny].abs()).sum::<f64>() * g.dx() * g.dy;
    if edge > 1e-12 {
        return Err(Error::SupportViolation { mass: edge });
    }
    Ok(g)
}

/// Inner product of two functions sampled on the `spec.modes` grid over
/// `S¹ × [−L, L)`.
pub fn ws_inner_fn(spec: &SobolevSpec, f1: Field, f2: Field) -> Result<f64> {
    ws_inner_grid(spec, &sample_checked(spec, f1)?, &sample_checked(spec, f2)?)
}

pub fn ws_norm_fn(spec: &SobolevSpec, f: Field) -> Result<f64> {
    ws_norm_grid(spec, &sample_checked(spec, f)?)
}

/// A constant `C` with `‖φ‖²_{W^t} ≤ ε‖φ‖²_{W^s} + C‖φ‖²_{L¹}` for every
/// field on grids shaped like `g`: low modes are bounded through
/// `|c(ξ, η)| ≤ ‖φ‖_{L¹}`.
pub fn interpolation_constant(spec_t: &SobolevSpec, spec_s: &SobolevSpec, eps: f64, g: &PeriodicGrid) -> f64 {
    let half = g.half_period();
    let mut total = 0.0;
    for ix in 0..g.nx {
        let xi = frequency(ix, g.nx);
        for iy in 0..g.ny {
            let eta = PI * frequency(iy, g.ny) / half;
            total += (spec_t.weight(xi, eta) - eps * spec_s.weight(xi, eta)).max(0.0);
        }
    }
    total / (2.0 * half)
}

/// Relative change of the norm when the fiber half-period doubles.
pub fn padding_check(spec: &SobolevSpec, h: &DensityField) -> Result<(f64, f64, f64)> {
    let a = ws_norm(spec, h)?;
    let doubled = SobolevSpec { y_pad: 2.0 * spec.y_pad, ..spec.clone() };
    let b = ws_norm(&doubled, h)?;
    Ok((a, b, (b - a).abs() / a.max(f64::MIN_POSITIVE)))
}

/// `c_σ = ∫_{ℝ²} |e^{i h₁} − 1|² |h|^{−2−2σ} dh`, so that the Fourier
/// seminorm with homogeneous weight equals the double integral divided
/// by `c_σ`.
pub fn double_integral_constant(sigma: f64) -> f64 {
    use statrs::function::gamma::gamma;
    2.0 * PI.powf(1.5) * gamma(sigma + 0.5) / (gamma(1.0 + sigma) * gamma(1.0 + 2.0 * sigma) * (PI * sigma).sin())
}

/// Direct evaluation of `∫∫ |φ(z+h) − φ(z)|² / |h|^{2+2σ} dh dz` on a small
/// periodic grid, `0 < σ < 1`. The shift energy `D(h)` is computed at the
/// lattice shifts and summed over the disk `|h| < R`, `R = periods · min
/// period`. Near the origin the quadratic part `Q(h) = hᵀGh` of `D` (with `G`
/// the gradient Gram matrix) is subtracted under a Gaussian cutoff and
/// integrated in closed form; beyond `R`, `D` is replaced by its mean.
/// Cost is O(N⁴ + N²·periods²).
pub fn double_integral_direct(g: &PeriodicGrid, sigma: f64, periods: usize) -> f64 {
    use statrs::function::gamma::gamma;
    let (nx, ny, dx, dy) = (g.nx, g.ny, g.dx(), g.dy);
    let (px, py) = (1.0f64, ny as f64 * dy);
    let area = dx * dy;
    let at = |ix: usize, iy: usize| g.values[(ix % nx) * ny + (iy % ny)];
    let energy: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (sx, sy) = (k / ny, k % ny);
            let mut e = 0.0;
            for ix in 0..nx {
                for iy in 0..ny {
                    let d = at(ix + sx, iy + sy) - at(ix, iy);
                    e += d * d;
                }
            }
            e * area
        })
        .collect();
    let (mut gxx, mut gyy, mut gxy) = (0.0, 0.0, 0.0);
    for ix in 0..nx {
        for iy in 0..ny {
            let ux = (at(ix + 1, iy) - at(ix + nx - 1, iy)) / (2.0 * dx);
            let uy = (at(ix, iy + 1) - at(ix, iy + ny - 1)) / (2.0 * dy);
            gxx += ux * ux * area;
            gyy += uy * uy * area;
            gxy += ux * uy * area;
        }
    }
    let radius = periods as f64 * px.min(py);
    let cut = 0.25 * px.min(py);
    let (ax, ay) = ((radius / px).ceil() as i64 + 1, (radius / py).ceil() as i64 + 1);
    let mut lattice = 0.0;
    for k in 0..nx * ny {
        let (sx, sy) = ((k / ny) as f64 * dx, (k % ny) as f64 * dy);
        for a in -ax..ax {
            for b in -ay..ay {
                let hx = sx + a as f64 * px;
                let hy = sy + b as f64 * py;
                let r2 = hx * hx + hy * hy;
                if r2 > 0.0 && r2 < radius * radius {
                    let q = (gxx * hx * hx + 2.0 * gxy * hx * hy + gyy * hy * hy) * (-r2 / (cut * cut)).exp();
                    lattice += (energy[k] - q) / r2.powf(1.0 + sigma) * area;
                }
            }
        }
    }
    // ∫_{ℝ²} Q(h) e^{−|h|²/c²} |h|^{−2−2σ} dh = π(gxx + gyy) c^{2−2σ} Γ(1−σ) / 2.
    let near = PI * (gxx + gyy) * cut.powf(2.0 - 2.0 * sigma) * gamma(1.0 - sigma) / 2.0;
    let mean: f64 = g.values.iter().sum::<f64>() * area;
    let mean_energy = 2.0 * g.l2_squared() - 2.0 * mean * mean / (px * py);
    let far = mean_energy * 2.0 * PI * radius.powf(-2.0 * sigma) / (2.0 * sigma);
    lattice + near + far
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump2(x: f64, y: f64) -> f64 {
        let t = y / 1.5;
        let b = if t.abs() < 1.0 { (1.0 - 1.0 / (1.0 - t * t)).exp() } else { 0.0 };
        (1.0 + 0.5 * (TAU * x).cos()) * b
    }

    #[test]
    fn zero_field_has_zero_pairing() {
        let spec = SobolevSpec::new(0.7, 4.0).with_modes(32, 64);
        assert_eq!(ws_inner_fn(&spec, &bump2, &|_, _| 0.0).unwrap(), 0.0);
    }

    #[test]
    fn support_violation_is_reported() {
        let spec = SobolevSpec::new(0.5, 1.0).with_modes(16, 32);
        assert!(matches!(ws_norm_fn(&spec, &bump2), Err(Error::SupportViolation { .. })));
    }

    #[test]
    fn gamma_constant_matches_quadrature() {
        // ∫_ℝ 2(1−cos t)·|t|^{−1−2σ} dt · ∫_ℝ (1+u²)^{−1−σ} du
        let sigma = 0.4;
        let n = 400_000;
        let tmax = 4000.0;
        let mut a = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) * tmax / n as f64;
            a += 2.0 * 2.0 * (1.0 - t.cos()) * t.powf(-1.0 - 2.0 * sigma);
        }
        a *= tmax / n as f64;
        a += 2.0 * 2.0 * tmax.powf(-2.0 * sigma) / (2.0 * sigma);
        let mut b = 0.0;
        let umax = 2000.0;
        for i in 0..n {
            let u = -umax + (i as f64 + 0.5) * 2.0 * umax / n as f64;
            b += (1.0 + u * u).powf(-1.0 - sigma);
        }
        b *= 2.0 * umax / n as f64;
        let c = double_integral_constant(sigma);
        assert!((a * b - c).abs() / c < 2e-3, "{} vs {}", a * b, c);
    }
}
