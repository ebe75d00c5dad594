//! Grid-refinement sweep of the W^s norm of the fixed density.

use serde::{Deserialize, Serialize};

use super::norm::{ws_norm, SobolevSpec};
use crate::dynamics::SystemParams;
use crate::transfer::{sbr_density, DensityField};
use crate::{Error, Result};

/// Ratio below which the last refinement step counts as bounded.
pub const BOUNDED_RATIO: f64 = 1.2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub grid: usize,
    pub s: f64,
    pub norm: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `norm(last) / norm(second to last)`.
    pub last_ratio: f64,
    pub bounded: bool,
}

impl SweepTable {
    pub fn from_rows(rows: Vec<SweepRow>) -> Self {
        let last_ratio = match rows.len() {
            0 | 1 => f64::NAN,
            n => rows[n - 1].norm / rows[n - 2].norm,
        };
        Self { rows, last_ratio, bounded: last_ratio < BOUNDED_RATIO }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("grid,s,norm,bounded_flag\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.12e},{}\n", r.grid, r.s, r.norm, self.bounded));
        }
        out
    }
}

/// Runs the fixed-density iteration on `n × n` grids for each `n` in
/// `grids` and records `‖Ψ‖_{W^s}` per grid.
pub fn regularity_sweep(
    params: &SystemParams,
    spec: &SobolevSpec,
    grids: &[usize],
    iters: usize,
    tol: f64,
) -> Result<SweepTable> {
    if grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParam("grids must be increasing".into()));
    }
    let mut rows = Vec::with_capacity(grids.len());
    for &n in grids {
        let sbr = sbr_density(params, n, n, iters, tol);
        if !sbr.converged {
            return Err(Error::NotConverged {
                iterations: sbr.iterations,
                last: sbr.history.last().copied().unwrap_or(f64::NAN),
            });
        }
        rows.push(SweepRow { grid: n, s: spec.s, norm: ws_norm(spec, &sbr.density)?, iterations: sbr.iterations });
    }
    Ok(SweepTable::from_rows(rows))
}

/// Norms of given fields, one row per field, labelled by `nx`.
pub fn sweep_fields(spec: &SobolevSpec, fields: &[DensityField]) -> Result<SweepTable> {
    let rows = fields
        .iter()
        .map(|h| Ok(SweepRow { grid: h.nx, s: spec.s, norm: ws_norm(spec, h)?, iterations: 0 }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::from_rows(rows))
}
