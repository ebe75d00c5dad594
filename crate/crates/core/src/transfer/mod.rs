//! The Perron–Frobenius operator, its Ulam discretization, and
//! correlation diagnostics.

pub mod density;
pub mod orbit;
pub mod ulam;
pub mod correlation;

pub use density::{apply_p, density_window, histogram, initial_density, sbr_density, DensityField, SbrResult};
pub use ulam::{second_eigenvalue, ulam_build, EigenEstimate, UlamOperator};
pub use correlation::{correlation_decay, CorrelationFit, Observable, SpectralDiagnostics};
