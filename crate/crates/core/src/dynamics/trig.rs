//! Real trigonometric polynomials on the unit circle `S¹ = ℝ/ℤ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

const TAU: f64 = 2.0 * PI;

/// `f(x) = c₀ + Σ_{j=1..K} (c_j cos 2πjx + s_j sin 2πjx)`.
///
/// `cos[j]` holds `c_j` for `j = 0..=K`; `sin[j-1]` holds `s_j`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { cos, sin }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { cos: vec![c], sin: Vec::new() }
    }

    /// `amp · cos(2πjx)`.
    pub fn cos_mode(j: usize, amp: f64) -> Self {
        let mut cos = vec![0.0; j + 1];
        cos[j] = amp;
        Self { cos, sin: Vec::new() }
    }

    /// `amp · sin(2πjx)`, `j ≥ 1`.
    pub fn sin_mode(j: usize, amp: f64) -> Self {
        assert!(j >= 1, "sin mode index starts at 1");
        let mut sin = vec![0.0; j];
        sin[j - 1] = amp;
        Self { cos: Vec::new(), sin }
    }

    pub fn degree(&self) -> usize {
        let kc = self.cos.iter().rposition(|&c| c != 0.0).unwrap_or(0);
        let ks = self.sin.iter().rposition(|&s| s != 0.0).map_or(0, |i| i + 1);
        kc.max(ks)
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|&c| c == 0.0)
    }

    fn coeff(&self, j: usize) -> (f64, f64) {
        let c = self.cos.get(j).copied().unwrap_or(0.0);
        let s = if j == 0 { 0.0 } else { self.sin.get(j - 1).copied().unwrap_or(0.0) };
        (c, s)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_deriv(0, x)
    }

    /// `f^{(k)}(x)` evaluated directly from the coefficients.
    pub fn eval_deriv(&self, k: u32, x: f64) -> f64 {
        let kmax = self.degree();
        let mut acc = if k == 0 { self.coeff(0).0 } else { 0.0 };
        if kmax == 0 {
            return acc;
        }
        // Chebyshev-style recurrence for cos/sin of multiples of the angle.
        let theta = TAU * x;
        let (s1, c1) = theta.sin_cos();
        let (mut cj, mut sj) = (1.0f64, 0.0f64);
        for j in 1..=kmax {
            let (cn, sn) = (cj * c1 - sj * s1, sj * c1 + cj * s1);
            cj = cn;
            sj = sn;
            let (a, b) = self.coeff(j);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let w = TAU * j as f64;
            let scale = w.powi(k as i32);
            // d^k/dx^k of a cos + b sin rotates the phase by k quarter turns.
            let (da, db) = match k % 4 {
                0 => (a, b),
                1 => (b, -a),
                2 => (-a, -b),
                _ => (-b, a),
            };
            acc += scale * (da * cj + db * sj);
        }
        acc
    }

    /// The `k`-th derivative as a trigonometric polynomial of the same degree.
    pub fn deriv(&self, k: u32) -> TrigPoly {
        let kmax = self.degree();
        let mut cos = vec![0.0; kmax + 1];
        let mut sin = vec![0.0; kmax];
        if k == 0 {
            cos[0] = self.coeff(0).0;
        }
        for j in 1..=kmax {
            let (a, b) = self.coeff(j);
            let scale = (TAU * j as f64).powi(k as i32);
            let (da, db) = match k % 4 {
                0 => (a, b),
                1 => (b, -a),
                2 => (-a, -b),
                _ => (-b, a),
            };
            cos[j] = scale * da;
            sin[j - 1] = scale * db;
        }
        TrigPoly { cos, sin }
    }

    /// `self + t · other`.
    pub fn add_scaled(&self, other: &TrigPoly, t: f64) -> TrigPoly {
        let nc = self.cos.len().max(other.cos.len());
        let ns = self.sin.len().max(other.sin.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        TrigPoly {
            cos: (0..nc).map(|i| get(&self.cos, i) + t * get(&other.cos, i)).collect(),
            sin: (0..ns).map(|i| get(&self.sin, i) + t * get(&other.sin, i)).collect(),
        }
    }

    /// Certified upper bound for `sup |f^{(k)}|`.
    ///
    /// Minimum of the coefficient bound `Σ (2πj)^k (|c_j| + |s_j|)` and a
    /// sampled maximum padded with Bernstein's inequality
    /// `‖g'‖ ≤ 2πK ‖g‖`: on a grid of spacing `h`,
    /// `sup|g| ≤ max_grid|g| / (1 − πKh)`.
    pub fn sup_bound(&self, k: u32) -> f64 {
        let kmax = self.degree();
        if kmax == 0 {
            return if k == 0 { self.coeff(0).0.abs() } else { 0.0 };
        }
        let coeff_bound: f64 = (0..=kmax)
            .map(|j| {
                let (a, b) = self.coeff(j);
                if j == 0 {
                    if k == 0 { a.abs() } else { 0.0 }
                } else {
                    (TAU * j as f64).powi(k as i32) * (a.abs() + b.abs())
                }
            })
            .sum();
        let n = 1024 * kmax;
        let h = 1.0 / n as f64;
        let sampled = (0..n)
            .map(|i| self.eval_deriv(k, i as f64 * h).abs())
            .fold(0.0f64, f64::max);
        let pad = 1.0 - PI * kmax as f64 * h;
        let bernstein = sampled / pad;
        // Guard against rounding in the sampled bound.
        (bernstein * (1.0 + 1e-12)).min(coeff_bound)
    }

    /// Certified `‖f‖_{C^r} = max_{0≤k≤r} sup|f^{(k)}|`, over-estimated.
    pub fn cnorm_bound(&self, r: u32) -> f64 {
        (0..=r).map(|k| self.sup_bound(k)).fold(0.0, f64::max)
    }
}
