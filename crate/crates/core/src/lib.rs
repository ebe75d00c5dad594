//! Numerical toolkit for the skew-product solenoid
//! `T(x,y) = (ℓx mod 1, λy + f(x))` on the cylinder `S¹ × ℝ`.
//!
//! - [`dynamics`]: the map, inverse branches, branch sums `S(x,a)`.
//! - [`transversality`]: certified counts `e(q,p)` of non-transversal word pairs.
//! - [`transfer`]: the Perron–Frobenius operator on grid densities, an Ulam
//!   discretization, and correlation decay.
//! - [`sobolev`]: `W^s` norms on the cylinder and a curve-based surrogate norm.
//! - [`genericity`]: parameter families `f_t = g + Σ tᵢφᵢ` and bad-set measures.

pub mod dynamics;
pub mod error;
pub mod transversality;
pub mod rng;
pub mod transfer;
pub mod sobolev;
pub mod genericity;

pub use error::{Error, Result};
