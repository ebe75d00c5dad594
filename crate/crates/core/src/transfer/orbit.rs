//! Forward orbits of `T` for Birkhoff sums and Monte-Carlo push-forwards.
//!
//! In binary floating point `x ↦ ℓx mod 1` discards low-order digits (for
//! even `ℓ` the orbit reaches 0 in about 53 steps). Each step therefore
//! refreshes the lowest digits with a seeded uniform perturbation below
//! `2^{-40}`, which keeps orbits Lebesgue-typical without visible bias.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{reduce, SystemParams};
use crate::rng;

const REFRESH: f64 = 1.0 / (1u64 << 40) as f64;

/// Infinite orbit iterator `(x_n, y_n)`.
pub struct Orbit<'a> {
    params: &'a SystemParams,
    state: (f64, f64),
    rng: ChaCha8Rng,
}

impl<'a> Orbit<'a> {
    pub fn new(params: &'a SystemParams, start: (f64, f64), seed: u64) -> Self {
        Self { params, state: start, rng: rng::stream(seed, 0x0b17, 0) }
    }

    /// Orbit from a seeded Lebesgue-random start in `S¹ × [−β, β]`.
    pub fn random(params: &'a SystemParams, seed: u64) -> Self {
        let mut r = rng::stream(seed, 0x0b17, 1);
        let beta = params.fiber_radius();
        let start = (r.gen::<f64>(), beta * (2.0 * r.gen::<f64>() - 1.0));
        Self::new(params, start, seed)
    }

    pub fn state(&self) -> (f64, f64) {
        self.state
    }

    /// Advances `n` steps without yielding.
    pub fn burn_in(&mut self, n: usize) -> &mut Self {
        for _ in 0..n {
            self.next();
        }
        self
    }
}

impl Iterator for Orbit<'_> {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        let (x, y) = self.params.step(self.state);
        let x = reduce(x + REFRESH * self.rng.gen::<f64>());
        self.state = (x, y);
        Some(self.state)
    }
}

/// `n` orbit points after `burn` steps.
pub fn birkhoff_points(params: &SystemParams, n: usize, burn: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut orbit = Orbit::random(params, seed);
    orbit.burn_in(burn);
    orbit.take(n).collect()
}
