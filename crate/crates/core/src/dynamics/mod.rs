//! The skew product, its symbolic dynamics, and branch sums.

pub mod branch;
pub mod symbolic;
pub mod system;
pub mod trig;

pub use branch::{
    branch_sum, branch_sum_deriv, branch_sum_ext, branch_sum_lift, depth_for, tail_bound,
    tail_truncate,
};
pub use symbolic::{
    inverse_branch, tau_pow, word_point, word_point_lift, InfiniteWord, PartitionInterval, Word,
};
pub use system::{reduce, SystemParams};
pub use trig::TrigPoly;
