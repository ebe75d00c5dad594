//! One function per subcommand. Each writes its artifacts through a
//! [`Writer`] and reports whether a budget ran out.

use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fs;

use solenoid_core::dynamics::SystemParams;
use solenoid_core::genericity::{bad_set_measure, minimal_big_n0, BadSetOptions, ParameterFamily};
use solenoid_core::sobolev::sweep::regularity_sweep;
use solenoid_core::sobolev::norm::padding_check;
use solenoid_core::sobolev::SobolevSpec;
use solenoid_core::transfer::orbit::{birkhoff_points, Orbit};
use solenoid_core::transfer::ulam::stationary_density;
use solenoid_core::transfer::{
    apply_p, correlation_decay, density_window, histogram, sbr_density, second_eigenvalue, ulam_build,
    SpectralDiagnostics,
};
use solenoid_core::transversality::{e_q_stabilized, growth_table, TransversalityOptions};

use crate::config::ExperimentConfig;
use crate::output::Writer;
use crate::CliError;

/// Files produced by the run-level subcommands, in pipeline order.
pub const REPORT_INPUTS: [&str; 7] = [
    "simulate.json",
    "transversality.json",
    "density.json",
    "spectrum.json",
    "correlations.json",
    "sobolev.json",
    "genericity.json",
];

#[derive(Debug, Default)]
pub struct Outcome {
    pub budget_exhausted: bool,
}

fn transversality_options(cfg: &ExperimentConfig) -> TransversalityOptions {
    TransversalityOptions {
        grid_step: cfg.transversality.grid_step,
        refinements: cfg.transversality.refinements,
        budget: cfg.budgets.enumeration,
        sample_over_budget: cfg.transversality.sample_over_budget,
        seed: cfg.seed,
    }
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let p = &cfg.system;
    let mut orbit = match cfg.simulate.start {
        Some([x, y]) => Orbit::new(p, (x, y), cfg.seed),
        None => Orbit::random(p, cfg.seed),
    };
    let mut pts = vec![orbit.state()];
    pts.extend(orbit.by_ref().take(cfg.simulate.steps));
    let alpha0 = p.alpha0();
    let inside = pts.iter().filter(|q| q.1.abs() <= alpha0).count();
    out.csv("orbit.csv", "n,x,y", pts.iter().enumerate().map(|(n, (x, y))| format!("{n},{x},{y}")))?;
    let mean_y = pts.iter().map(|q| q.1).sum::<f64>() / pts.len() as f64;
    out.json(
        "simulate.json",
        &json!({ "steps": cfg.simulate.steps, "alpha0": alpha0, "mean_y": mean_y, "in_trapping_region": inside, "final": pts.last() }),
    )?;
    Ok(Outcome::default())
}

pub fn transversality(cfg: &ExperimentConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let p = &cfg.system;
    let reports = growth_table(p, cfg.transversality.q_max, cfg.transversality.p_max, &transversality_options(cfg));
    out.csv(
        "transversality.csv",
        "q,p,e_lower,e_upper,stabilized,p0,growth_log,criterion,certified,budget_exhausted",
        reports.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                r.q,
                r.p,
                r.e_lower,
                r.e_upper,
                r.stabilized,
                r.p0.map_or(String::new(), |v| v.to_string()),
                r.growth_log,
                r.criterion,
                r.certified,
                r.budget_exhausted
            )
        }),
    )?;
    let gamma: Vec<f64> = reports.iter().map(|r| r.gamma_ref(p)).collect();
    out.json(
        "transversality.json",
        &json!({ "threshold_note": "theta = 2 lambda^q l^-q alpha0", "reports": reports, "gamma_ref": gamma }),
    )?;
    Ok(Outcome { budget_exhausted: reports.iter().any(|r| r.budget_exhausted) })
}

#[derive(Serialize)]
struct DensityRow {
    grid: usize,
    iterations: usize,
    converged: bool,
    last_difference: f64,
    invariance_residual: f64,
    mass: f64,
    min_value: f64,
    leaked: f64,
    birkhoff_l1: Option<f64>,
}

pub fn density(cfg: &ExperimentConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let p = &cfg.system;
    let d = &cfg.density;
    let points = (d.orbit_points > 0).then(|| birkhoff_points(p, d.orbit_points, d.burn_in, cfg.seed));
    let mut rows = Vec::new();
    let mut finest = None;
    for &n in &d.grids {
        let sbr = sbr_density(p, n, n, cfg.budgets.iterations, d.tol);
        let applied = apply_p(p, &sbr.density);
        let birkhoff_l1 = match &points {
            Some(pts) => Some(histogram(&sbr.density, pts.iter().copied())?.l1_distance(&sbr.density)),
            None => None,
        };
        rows.push(DensityRow {
            grid: n,
            iterations: sbr.iterations,
            converged: sbr.converged,
            last_difference: sbr.history.last().copied().unwrap_or(f64::NAN),
            invariance_residual: applied.field.l1_distance(&sbr.density),
            mass: sbr.density.mass(),
            min_value: sbr.density.min_value(),
            leaked: applied.leaked,
            birkhoff_l1,
        });
        finest = Some(sbr.density);
    }
    let field = finest.expect("validated: at least one grid");
    out.csv(
        "density.csv",
        "x,y,value",
        (0..field.nx).flat_map(|ix| {
            let f = &field;
            (0..f.ny).map(move |iy| format!("{},{},{}", f.x_center(ix), f.y_center(iy), f.get(ix, iy)))
        }),
    )?;
    out.pgm("density.pgm", &field)?;
    let (y_min, y_max) = density_window(p);
    out.json("density.json", &json!({ "window": [y_min, y_max], "grids": rows }))?;
    Ok(Outcome::default())
}

fn spectral(cfg: &ExperimentConfig) -> (f64, bool, f64) {
    let p = &cfg.system;
    let sp = &cfg.spectrum;
    let op = ulam_build(p, sp.grid, sp.grid, sp.samples_per_cell, cfg.seed);
    let ev = second_eigenvalue(&op, cfg.budgets.iterations, cfg.seed);
    (ev.value, ev.converged, op.mass_error)
}

pub fn spectrum(cfg: &ExperimentConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let p = &cfg.system;
    let sp = &cfg.spectrum;
    let op = ulam_build(p, sp.grid, sp.grid, sp.samples_per_cell, cfg.seed);
    let ev = second_eigenvalue(&op, cfg.budgets.iterations, cfg.seed);
    let fixed = stationary_density(&op, cfg.budgets.iterations * 10, 1e-13);
    let report = e_q_stabilized(p, cfg.transversality.q_max, cfg.transversality.p_max, &transversality_options(cfg));
    out.json(
        "spectrum.json",
        &json!({
            "grid": sp.grid,
            "samples_per_cell": sp.samples_per_cell,
            "mass_error": op.mass_error,
            "second_eigenvalue": ev,
            "fixed_density_min": fixed.min_value(),
            "gamma_ref": report.gamma_ref(p),
            "gamma_ref_q": report.q,
            "gamma_ref_note": "reference value with B0 = 1, not a bound",
        }),
    )?;
    Ok(Outcome { budget_exhausted: report.budget_exhausted })
}

pub fn correlations(cfg: &ExperimentConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let p = &cfg.system;
    let c = &cfg.correlations;
    let mut diag: SpectralDiagnostics = correlation_decay(p, &c.observables, c.n_max, c.orbit_len, cfg.seed)?;
    let (ev, _, _) = spectral(cfg);
    diag.second_ev_estimate = Some(ev);
    let names: Vec<String> = diag.corr_rates.iter().map(|f| f.observable.clone()).collect();
    let header = std::iter::once("n".to_string()).chain(names).collect::<Vec<_>>().join(",");
    let rows = (0..=c.n_max).map(|n| {
        std::iter::once(n.to_string())
            .chain(diag.corr_rates.iter().map(|f| f.correlations[n].to_string()))
            .collect::<Vec<_>>()
            .join(",")
    });
    out.csv("correlations.csv", &header, rows)?;
    out.json("correlations.json", &diag)?;
    Ok(Outcome::default())
}

pub fn sobolev_spec(cfg: &ExperimentConfig) -> SobolevSpec {
    let (_, hi) = density_window(&cfg.system);
    let y_pad = cfg.sobolev.y_pad.unwrap_or(2.0 * (hi + 1.0));
    SobolevSpec::new(cfg.sobolev_s(), y_pad)
        .with_modes(cfg.sobolev.modes.0, cfg.sobolev.modes.1)
        .with_weighting(cfg.sobolev.weighting)
}

pub fn sobolev(cfg: &ExperimentConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let p = &cfg.system;
    let spec = sobolev_spec(cfg);
    let table = regularity_sweep(p, &spec, &cfg.sobolev.grids, cfg.budgets.iterations, cfg.sobolev.tol)?;
    let coarsest = cfg.sobolev.grids[0];
    let sbr = sbr_density(p, coarsest, coarsest, cfg.budgets.iterations, cfg.sobolev.tol);
    let (_, _, padding_change) = padding_check(&spec, &sbr.density)?;
    out.csv(
        "sobolev.csv",
        "grid,s,norm,bounded_flag",
        table.rows.iter().map(|r| format!("{},{},{},{}", r.grid, r.s, r.norm, table.bounded)),
    )?;
    let s = spec.s;
    out.json(
        "sobolev.json",
        &json!({
            "spec": spec,
            "table": table,
            "padding_doubling_change": padding_change,
            "regime_factor": regime_factor(p, s),
        }),
    )?;
    Ok(Outcome::default())
}

pub fn regime_factor(p: &SystemParams, s: f64) -> f64 {
    p.lambda.powf(1.0 + 2.0 * s) * p.lap as f64
}

pub fn genericity(cfg: &ExperimentConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let p = &cfg.system;
    let g = &cfg.genericity;
    let base = g.g.clone().unwrap_or_else(|| p.f.clone());
    let family = ParameterFamily::fourier(p.lap, p.lambda, p.r, base, g.m)?;
    let opts = BadSetOptions {
        big_n0: g.big_n0.unwrap_or_else(|| minimal_big_n0(p.lap, p.lambda)),
        trials: g.trials.unwrap_or(cfg.budgets.trials),
        seed: cfg.seed,
        threshold_scale: g.threshold_scale,
        x_samples: g.x_samples,
        budget: cfg.budgets.enumeration,
        precision: 1e-12,
    };
    let estimates = (g.q_range.0..=g.q_range.1)
        .map(|q| bad_set_measure(&family, q, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    out.csv(
        "genericity.csv",
        "q,p,N0,measure_estimate,ci_lo,ci_hi,pairs_enumerated,good_pairs,sampled,analytic_shape",
        estimates.iter().map(|e| {
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                e.q, e.p, e.big_n0, e.measure_estimate, e.ci.0, e.ci.1, e.pairs_enumerated, e.good_pairs, e.sampled, e.analytic_shape
            )
        }),
    )?;
    out.json("genericity.json", &json!({ "D0": family.d0, "alpha0": family.alpha0(), "estimates": estimates }))?;
    Ok(Outcome::default())
}

/// Merges the JSON results present in the output directory into
/// `summary.json`, together with the regime check `λ^{1+2s}ℓ > 1`.
pub fn report(cfg: &ExperimentConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let mut results = Map::new();
    for name in REPORT_INPUTS {
        let path = out.dir.join(name);
        if let Ok(text) = fs::read_to_string(&path) {
            let doc: Value = serde_json::from_str(&text)?;
            let key = name.trim_end_matches(".json").to_string();
            results.insert(key, doc.get("result").cloned().unwrap_or(Value::Null));
        }
    }
    let s = cfg.sobolev_s();
    let factor = regime_factor(&cfg.system, s);
    out.json(
        "summary.json",
        &json!({
            "regime": { "s": s, "factor": factor, "sobolev_regime": factor > 1.0 },
            "results": results,
        }),
    )?;
    Ok(Outcome::default())
}
