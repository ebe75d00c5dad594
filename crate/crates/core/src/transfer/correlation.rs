//! Correlation decay along a single long orbit.

use serde::{Deserialize, Serialize};

use super::orbit::Orbit;
use crate::dynamics::SystemParams;
use crate::{Error, Result};

/// Observables available to the correlation estimator. Fiber-dependent
/// ones are multiplied by a smooth cutoff that equals 1 on the attractor
/// and vanishes outside twice the fiber radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `y · χ(y)`.
    Fiber,
    /// `cos(2πx) · χ(y)`.
    CosX,
    /// `cos(2πx) · y · χ(y)`.
    CosXFiber,
    /// Constant function.
    Constant(f64),
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Fiber => "fiber".into(),
            Observable::CosX => "cos_x".into(),
            Observable::CosXFiber => "cos_x_fiber".into(),
            Observable::Constant(c) => format!("constant_{c}"),
        }
    }

    pub fn eval(&self, x: f64, y: f64, radius: f64) -> f64 {
        let chi = cutoff(y, radius);
        match *self {
            Observable::Fiber => y * chi,
            Observable::CosX => (std::f64::consts::TAU * x).cos() * chi,
            Observable::CosXFiber => (std::f64::consts::TAU * x).cos() * y * chi,
            Observable::Constant(c) => c,
        }
    }
}

/// Smooth plateau: 1 on `|y| ≤ r`, 0 on `|y| ≥ 2r`.
pub fn cutoff(y: f64, r: f64) -> f64 {
    let t = (y.abs() - r) / r;
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        b / (a + b)
    }
}

/// `ν(ρ₀, ρ₁) = Σ_{j=ρ₁+1}^{ρ₀} 1/j`.
pub fn nu(rho0: u32, rho1: u32) -> f64 {
    (rho1 + 1..=rho0).map(|j| 1.0 / j as f64).sum()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationFit {
    pub observable: String,
    /// `C_n(φ, φ)` for `n = 0..=n_max`.
    pub correlations: Vec<f64>,
    /// Monte-Carlo standard error of a single `C_n`.
    pub noise: f64,
    /// Fitted per-step decay factor `exp(slope)`, if a fit window exists.
    pub rate: Option<f64>,
    pub fit_window: (usize, usize),
    pub noise_floor: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralDiagnostics {
    pub second_ev_estimate: Option<f64>,
    pub corr_rates: Vec<CorrelationFit>,
    /// Reference value with `B₀ = 1`; not a bound.
    pub gamma_ref: Option<f64>,
    pub rho0: u32,
    pub rho1: u32,
    pub nu: f64,
}

impl SpectralDiagnostics {
    pub fn new(params: &SystemParams, corr_rates: Vec<CorrelationFit>) -> Self {
        let rho0 = params.r - 1;
        Self { second_ev_estimate: None, corr_rates, gamma_ref: None, rho0, rho1: 0, nu: nu(rho0, 0) }
    }
}

/// Minimum number of lags in a fit window.
pub const MIN_FIT: usize = 5;

/// Least-squares slope of `log|C_n|` against `n` over the initial lags whose
/// magnitude stays above three standard errors.
pub fn fit_rate(corr: &[f64], noise: f64) -> (Option<f64>, (usize, usize), bool) {
    let mut end = 0;
    while end < corr.len() && corr[end].abs() > 3.0 * noise && corr[end] != 0.0 {
        end += 1;
    }
    let start = 1.min(end);
    if end - start < MIN_FIT {
        return (None, (start, end), true);
    }
    let pts: Vec<(f64, f64)> = (start..end).map(|n| (n as f64, corr[n].abs().ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (Some((sxy / sxx).exp()), (start, end), false)
}

/// Autocorrelation estimates `C_n(φ, ψ)` from one orbit of length
/// `orbit_len` after a burn-in of 1000 steps, with a fitted rate per
/// observable (`ψ = φ`).
pub fn correlation_decay(
    params: &SystemParams,
    observables: &[Observable],
    n_max: usize,
    orbit_len: usize,
    seed: u64,
) -> Result<SpectralDiagnostics> {
    if orbit_len <= 2 * n_max {
        return Err(Error::InvalidParam(format!("orbit_len {orbit_len} must exceed 2·n_max = {}", 2 * n_max)));
    }
    let radius = params.fiber_radius().max(1e-12);
    let mut orbit = Orbit::random(params, seed);
    orbit.burn_in(1000);
    let pts: Vec<(f64, f64)> = orbit.take(orbit_len).collect();
    let fits = observables
        .iter()
        .map(|obs| {
            let phi: Vec<f64> = pts.iter().map(|&(x, y)| obs.eval(x, y, radius)).collect();
            let corr = cross_correlations(&phi, &phi, n_max);
            let noise = corr[0].max(0.0) / (orbit_len as f64).sqrt();
            let (rate, fit_window, noise_floor) = fit_rate(&corr, noise);
            CorrelationFit { observable: obs.name(), correlations: corr, noise, rate, fit_window, noise_floor }
        })
        .collect();
    Ok(SpectralDiagnostics::new(params, fits))
}

/// `C_n = mean_k φ_{k+n} ψ_k − mean(φ_{n..}) mean(ψ_{..N−n})`.
pub fn cross_correlations(phi: &[f64], psi: &[f64], n_max: usize) -> Vec<f64> {
    let len = phi.len();
    (0..=n_max)
        .map(|n| {
            let m = (len - n) as f64;
            let mut sa = 0.0;
            let mut sb = 0.0;
            let mut sab = 0.0;
            for k in 0..len - n {
                sa += phi[k + n];
                sb += psi[k];
                sab += phi[k + n] * psi[k];
            }
            sab / m - (sa / m) * (sb / m)
        })
        .collect()
}
