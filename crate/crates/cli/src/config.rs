//! Experiment configuration: JSON file, dotted `key=value` overrides, and
//! validation of every block before anything runs.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::PathBuf;

use solenoid_core::dynamics::{SystemParams, TrigPoly};
use solenoid_core::sobolev::Weighting;
use solenoid_core::transfer::Observable;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budgets: Budgets,
    /// Not echoed into outputs, so results do not depend on where they land.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub simulate: SimulateBlock,
    #[serde(default)]
    pub transversality: TransversalityBlock,
    #[serde(default)]
    pub density: DensityBlock,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub correlations: CorrelationsBlock,
    #[serde(default)]
    pub sobolev: SobolevBlock,
    #[serde(default)]
    pub genericity: GenericityBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub enumeration: u128,
    pub iterations: usize,
    pub trials: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { enumeration: 10_000_000, iterations: 2000, trials: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateBlock {
    pub steps: usize,
    pub start: Option<[f64; 2]>,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        Self { steps: 1000, start: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransversalityBlock {
    pub q_max: usize,
    pub p_max: usize,
    pub grid_step: Option<f64>,
    pub refinements: u32,
    pub sample_over_budget: bool,
}

impl Default for TransversalityBlock {
    fn default() -> Self {
        Self { q_max: 2, p_max: 6, grid_step: None, refinements: 4, sample_over_budget: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityBlock {
    pub grids: Vec<usize>,
    pub tol: f64,
    /// Birkhoff orbit length for the histogram comparison; 0 skips it.
    pub orbit_points: usize,
    pub burn_in: usize,
}

impl Default for DensityBlock {
    fn default() -> Self {
        Self { grids: vec![64, 128], tol: 1e-8, orbit_points: 0, burn_in: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumBlock {
    pub grid: usize,
    pub samples_per_cell: usize,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self { grid: 64, samples_per_cell: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationsBlock {
    pub n_max: usize,
    pub orbit_len: usize,
    pub observables: Vec<Observable>,
}

impl Default for CorrelationsBlock {
    fn default() -> Self {
        Self { n_max: 40, orbit_len: 1_000_000, observables: vec![Observable::Fiber, Observable::CosX] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevBlock {
    /// Defaults to `system.s`.
    pub s: Option<f64>,
    /// Fiber half-period; defaults to twice the density window plus 2.
    #[serde(rename = "L")]
    pub y_pad: Option<f64>,
    pub modes: (usize, usize),
    pub grids: Vec<usize>,
    pub tol: f64,
    pub weighting: Weighting,
}

impl Default for SobolevBlock {
    fn default() -> Self {
        Self { s: None, y_pad: None, modes: (64, 256), grids: vec![64, 128, 256], tol: 1e-10, weighting: Weighting::Homogeneous }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenericityBlock {
    pub m: usize,
    /// Defaults to the smallest `N₀` with `λ^{N₀−1}ℓ² < 1`.
    #[serde(rename = "N0")]
    pub big_n0: Option<usize>,
    pub q_range: (usize, usize),
    /// Defaults to `budgets.trials`.
    pub trials: Option<usize>,
    pub threshold_scale: f64,
    pub x_samples: usize,
    /// Base function of the family; defaults to `system.f`.
    pub g: Option<TrigPoly>,
}

impl Default for GenericityBlock {
    fn default() -> Self {
        Self { m: 4, big_n0: None, q_range: (2, 4), trials: None, threshold_scale: 1.0, x_samples: 0, g: None }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemParams::new(3, 0.6, TrigPoly::cos_mode(1, 1.0))
                .and_then(|p| p.with_s(0.3))
                .expect("default system is valid"),
            seed: 0,
            budgets: Budgets::default(),
            output_dir: None,
            simulate: SimulateBlock::default(),
            transversality: TransversalityBlock::default(),
            density: DensityBlock::default(),
            spectrum: SpectrumBlock::default(),
            correlations: CorrelationsBlock::default(),
            sobolev: SobolevBlock::default(),
            genericity: GenericityBlock::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl ExperimentConfig {
    /// Parses JSON text (or starts from defaults when `None`), applies
    /// overrides, resolves defaults and validates every block.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self, CliError> {
        let mut value = match text {
            Some(t) => serde_json::from_str::<Value>(t).map_err(|e| invalid(format!("config: {e}")))?,
            None => serde_json::to_value(Self::default()).expect("default config serializes"),
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.resolved()
    }

    pub fn resolved(mut self) -> Result<Self, CliError> {
        self.system = self.system.resolved().map_err(|e| invalid(e.to_string()))?;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let b = &self.budgets;
        if b.iterations == 0 || b.trials == 0 || b.enumeration == 0 {
            return Err(invalid("budgets must be positive"));
        }
        let t = &self.transversality;
        if t.q_max == 0 || t.p_max < 2 {
            return Err(invalid("transversality needs q_max ≥ 1 and p_max ≥ 2"));
        }
        if t.grid_step.is_some_and(|h| !(h > 0.0)) {
            return Err(invalid("transversality.grid_step must be > 0"));
        }
        let d = &self.density;
        if d.grids.is_empty() || d.grids.iter().any(|&n| n < 2) || !(d.tol > 0.0) {
            return Err(invalid("density needs grids ≥ 2 and tol > 0"));
        }
        let sp = &self.spectrum;
        if sp.grid < 2 || sp.samples_per_cell == 0 {
            return Err(invalid("spectrum needs grid ≥ 2 and samples_per_cell ≥ 1"));
        }
        let c = &self.correlations;
        if c.observables.is_empty() || c.orbit_len <= 2 * c.n_max {
            return Err(invalid("correlations needs observables and orbit_len > 2·n_max"));
        }
        let so = &self.sobolev;
        let s = self.sobolev_s();
        if !(s >= 0.0) {
            return Err(invalid("sobolev.s must be ≥ 0"));
        }
        if so.y_pad.is_some_and(|l| !(l > 0.0)) {
            return Err(invalid("sobolev.L must be > 0"));
        }
        if so.grids.is_empty() || so.grids.windows(2).any(|w| w[1] <= w[0]) || !(so.tol > 0.0) {
            return Err(invalid("sobolev.grids must be increasing and tol > 0"));
        }
        if so.modes.0 < 2 || so.modes.1 < 2 {
            return Err(invalid("sobolev.modes must be ≥ 2"));
        }
        let g = &self.genericity;
        if g.m == 0 || g.q_range.0 == 0 || g.q_range.1 < g.q_range.0 || !(g.threshold_scale > 0.0) {
            return Err(invalid("genericity needs m ≥ 1, 1 ≤ q_min ≤ q_max and threshold_scale > 0"));
        }
        if g.big_n0.is_some_and(|n| n == 0) || g.trials.is_some_and(|n| n == 0) {
            return Err(invalid("genericity.N0 and trials must be ≥ 1"));
        }
        Ok(())
    }

    pub fn sobolev_s(&self) -> f64 {
        self.sobolev.s.unwrap_or(self.system.s)
    }

    /// Output directory: `--out`, then `output_dir`, then `$OUTPUT_DIR`,
    /// then `./output`.
    pub fn output_dir(&self, cli: Option<&PathBuf>) -> PathBuf {
        cli.cloned()
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os("OUTPUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("output"))
    }

    pub fn echo(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Sets `a.b.c=value`; the value is parsed as JSON when possible and as a
/// string otherwise. Missing intermediate objects are created.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| invalid(format!("override `{spec}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(invalid(format!("override `{spec}` has an empty key")));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| invalid(format!("override `{spec}`: `{key}` is not an object")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    let obj = node.as_object_mut().ok_or_else(|| invalid(format!("override `{spec}`: parent is not an object")))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::load(None, &[]).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::load(Some(&text), &[]).unwrap(), cfg);
    }

    #[test]
    fn dotted_overrides() {
        let cfg = ExperimentConfig::load(None, &["system.lambda=0.3".into(), "density.grids=[16,32]".into()]).unwrap();
        assert_eq!(cfg.system.lambda, 0.3);
        assert_eq!(cfg.density.grids, vec![16, 32]);
        let cfg = ExperimentConfig::load(None, &["sobolev.weighting=bessel".into()]).unwrap();
        assert_eq!(cfg.sobolev.weighting, Weighting::Bessel);
    }

    #[test]
    fn bad_values_are_validation_errors() {
        for o in ["system.lambda=1.5", "density.tol=0", "nope", "budgets.bogus=1", "transversality.p_max=1"] {
            assert!(matches!(ExperimentConfig::load(None, &[o.into()]), Err(CliError::Validation(_))), "{o}");
        }
    }
}
