//! System parameters and the forward map `T(x,y) = (ℓx, λy + f(x))`.

use serde::{Deserialize, Serialize};

use super::trig::TrigPoly;
use crate::error::{Error, Result};

/// Parameters `(ℓ, λ, f, r, s, κ)` of the skew product.
///
/// JSON form: `{"lap":…, "lambda":…, "f":{"cos":[…],"sin":[…]}, "r":…, "s":…, "kappa":…}`.
/// `r`, `s` and `kappa` may be omitted; `kappa` then defaults to
/// `1.0001 · ‖f‖_{C^r}` (or 1 when `f ≡ 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub lap: u32,
    pub lambda: f64,
    pub f: TrigPoly,
    #[serde(default = "default_r")]
    pub r: u32,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub kappa: Option<f64>,
}

fn default_r() -> u32 {
    3
}

impl SystemParams {
    /// Builds and validates, resolving the default `κ`.
    pub fn new(lap: u32, lambda: f64, f: TrigPoly) -> Result<Self> {
        Self { lap, lambda, f, r: 3, s: 0.0, kappa: None }.resolved()
    }

    pub fn with_r(mut self, r: u32) -> Result<Self> {
        self.r = r;
        self.kappa = None;
        self.resolved()
    }

    pub fn with_s(mut self, s: f64) -> Result<Self> {
        self.s = s;
        self.resolved()
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = Some(kappa);
        self.resolved()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SystemParams = serde_json::from_str(text)?;
        raw.resolved()
    }

    /// Fills in the default `κ` and checks every invariant.
    pub fn resolved(mut self) -> Result<Self> {
        let cnorm = self.f.cnorm_bound(self.r);
        if self.kappa.is_none() {
            self.kappa = Some(if cnorm > 0.0 { 1.0001 * cnorm } else { 1.0 });
        }
        self.validate_with(cnorm)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(self.f.cnorm_bound(self.r))
    }

    fn validate_with(&self, cnorm: f64) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if self.lap < 2 {
            return bad(format!("lap must be ≥ 2, got {}", self.lap));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda must lie in (0,1), got {}", self.lambda));
        }
        if self.r < 3 {
            return bad(format!("r must be ≥ 3, got {}", self.r));
        }
        if !(self.s >= 0.0) {
            return bad(format!("s must be ≥ 0, got {}", self.s));
        }
        let kappa = self.kappa();
        if !(kappa > 0.0) {
            return bad(format!("kappa must be > 0, got {kappa}"));
        }
        if kappa < cnorm {
            return bad(format!("kappa = {kappa} is below the certified C^r norm {cnorm}"));
        }
        Ok(())
    }

    /// Checks `0 ≤ s < r − 2`, needed before Sobolev diagnostics.
    pub fn validate_sobolev(&self) -> Result<()> {
        if self.s >= self.r as f64 - 2.0 {
            return Err(Error::InvalidParam(format!(
                "Sobolev exponent s = {} must satisfy s < r − 2 = {}",
                self.s,
                self.r - 2
            )));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or(1.0)
    }

    /// `α₀ = κ / (1 − λ)`, the half-height of the trapping region `D`.
    pub fn alpha0(&self) -> f64 {
        self.kappa() / (1.0 - self.lambda)
    }

    /// `sup|f| / (1 − λ)`: the cylinder `S¹ × [−β, β]` is forward invariant
    /// and contains the attractor. Falls back to `α₀` when `f ≡ 0`.
    pub fn fiber_radius(&self) -> f64 {
        let sup = self.f.sup_bound(0);
        if sup > 0.0 {
            sup / (1.0 - self.lambda)
        } else {
            self.alpha0()
        }
    }

    /// `λ^{1+2s} ℓ`; the Sobolev regime needs this above 1.
    pub fn regime_factor(&self) -> f64 {
        self.lambda.powf(1.0 + 2.0 * self.s) * self.lap as f64
    }

    pub fn in_trapping_region(&self, y: f64) -> bool {
        y.abs() <= self.alpha0()
    }

    /// One application of `T`.
    pub fn step(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (reduce(self.lap as f64 * x), self.lambda * y + self.f.eval(x))
    }
}

/// Reduces a real number to the circle representative in `[0, 1)`.
pub fn reduce(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 { 0.0 } else { r }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn step_examples() {
        let p = SystemParams::new(2, 0.5, TrigPoly::zero()).unwrap();
        assert_eq!(p.step((0.3, 1.0)), (0.6, 0.5));
        let p = SystemParams::new(2, 0.5, TrigPoly::constant(1.0)).unwrap();
        assert_eq!(p.step((0.0, 0.0)), (0.0, 1.0));
        let p = SystemParams::new(3, 0.6, TrigPoly::cos_mode(1, 1.0)).unwrap();
        let (x, y) = p.step((0.25, 0.0));
        assert_eq!(x, 0.75);
        assert_abs_diff_eq!(y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kappa_defaults_and_validation() {
        let p = SystemParams::new(2, 0.5, TrigPoly::cos_mode(1, 1.0)).unwrap();
        let tau3 = (2.0 * std::f64::consts::PI).powi(3);
        assert!(p.kappa() >= tau3 * 1.0001 && p.kappa() < tau3 * 1.01);
        assert_abs_diff_eq!(p.alpha0(), p.kappa() / 0.5);
        assert!(p.clone().with_kappa(1.0).is_err());
        assert!(SystemParams::new(1, 0.5, TrigPoly::zero()).is_err());
        assert!(SystemParams::new(2, 1.0, TrigPoly::zero()).is_err());
        assert!(p.clone().with_r(2).is_err());
        assert!(p.clone().with_s(0.5).unwrap().validate_sobolev().is_ok());
        assert!(p.clone().with_s(1.0).unwrap().validate_sobolev().is_err());
        assert!(p.with_s(1.0).unwrap().with_r(4).unwrap().validate_sobolev().is_ok());
    }

    #[test]
    fn json_roundtrip_and_defaults() {
        let p = SystemParams::from_json(
            r#"{"lap":3,"lambda":0.6,"f":{"cos":[0,1],"sin":[]},"s":0.3}"#,
        )
        .unwrap();
        assert_eq!(p.r, 3);
        assert!(p.kappa.is_some());
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(SystemParams::from_json(&text).unwrap(), p);
    }

    #[test]
    fn reduce_stays_half_open() {
        assert_eq!(reduce(1.0), 0.0);
        assert_eq!(reduce(-0.25), 0.75);
        assert!(reduce(-1e-300) < 1.0);
    }
}
