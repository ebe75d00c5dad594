//! Branch sums `S(x,a) = Σ_{i=1..n} λ^{i−1} f([a]_i(x))` and their extensions.

use super::symbolic::{InfiniteWord, PartitionInterval, Word};
use super::system::{reduce, SystemParams};
use super::trig::TrigPoly;
use crate::error::Result;

/// `d^ν/dx^ν` of `Σ λ^{i−1} g([a]_i(x))` evaluated on the affine branch
/// chain through the lift `x`, i.e. `Σ λ^{i−1} ℓ^{−iν} g^{(ν)}((x + J_i)/ℓ^i)`.
pub fn branch_sum_lift(g: &TrigPoly, lap: u32, lambda: f64, a: &Word, x: f64, nu: u32) -> f64 {
    let l = lap as f64;
    let shrink = l.powi(-(nu as i32));
    let mut y = x;
    let mut weight = 1.0;
    let mut acc = 0.0;
    for &k in a.symbols() {
        y = (y + (k - 1) as f64) / l;
        weight *= shrink;
        acc += weight * g.eval_deriv(nu, y);
        weight *= lambda;
    }
    acc
}

/// `S(x,a)`.
pub fn branch_sum(params: &SystemParams, a: &Word, x: f64) -> f64 {
    branch_sum_deriv(params, a, x, 0)
}

/// `d^ν/dx^ν S(x,a)` for a circle point `x`.
pub fn branch_sum_deriv(params: &SystemParams, a: &Word, x: f64, nu: u32) -> f64 {
    branch_sum_lift(&params.f, params.lap, params.lambda, a, reduce(x), nu)
}

/// `d^ν/dx^ν S_c(x,a)`: the `C^r` extension of `S(·,a)|_{P(c)}` to the
/// closure of `P_*(c)`. `x` may be given as any lift of the circle point.
pub fn branch_sum_ext(
    params: &SystemParams,
    c: &PartitionInterval,
    a: &Word,
    x: f64,
    nu: u32,
) -> Result<f64> {
    let star = PartitionInterval { star: true, ..c.clone() };
    let z = star.to_lift(x)?;
    Ok(branch_sum_lift(&params.f, params.lap, params.lambda, a, z, nu))
}

/// Closed-form geometric tail `Σ_{i>n} λ^{i−1} ℓ^{−iν} M`
/// `= M λ^n ℓ^{−(n+1)ν} / (1 − λℓ^{−ν})`, where `M ≥ sup|g^{(ν)}|`.
pub fn tail_bound(lap: u32, lambda: f64, sup_deriv: f64, depth: usize, nu: u32) -> f64 {
    let shrink = (lap as f64).powi(-(nu as i32));
    sup_deriv * lambda.powi(depth as i32) * shrink.powi(depth as i32 + 1) / (1.0 - lambda * shrink)
}

/// Truncates an infinite word at `depth` and bounds the error that the
/// truncation introduces in `d^ν/dx^ν S`. The bound uses `κ`, so it never
/// exceeds `λ^{depth} α₀ ℓ^{−ν}`.
pub fn tail_truncate(params: &SystemParams, a: &InfiniteWord, depth: usize, nu: u32) -> (Word, f64) {
    assert!(depth >= 1, "truncation depth must be ≥ 1");
    let bound = tail_bound(params.lap, params.lambda, params.kappa(), depth, nu);
    (a.truncate(depth), bound)
}

/// Smallest depth whose `ν`-th derivative tail bound falls below `target`.
pub fn depth_for(params: &SystemParams, nu: u32, target: f64) -> usize {
    let mut n = 1;
    while tail_bound(params.lap, params.lambda, params.kappa(), n, nu) >= target && n < 10_000 {
        n += 1;
    }
    n
}
