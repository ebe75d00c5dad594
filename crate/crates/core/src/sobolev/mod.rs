//! Sobolev norms, the grid-refinement regularity diagnostic, and a finite
//! surrogate of the curve-integral norm.

pub mod norm;
pub mod sweep;
pub mod dagger;

pub use norm::{ws_inner, ws_inner_fn, ws_norm, ws_norm_fn, PeriodicGrid, SobolevSpec, Weighting};
pub use sweep::{regularity_sweep, SweepRow, SweepTable};
pub use dagger::{dagger_norm_surrogate, CurveFamily, SmoothField};
