//! Independent ground-truth solvers for validating LiquidMAAS on small instances.
//!
//! Neither solver uses the price iteration or the metric-ordering rule of
//! [`primal`](crate::primal): the integer oracle enumerates helper subsets and
//! the relaxed oracle runs projected gradient ascent with an exact projection
//! onto the feasible polytope.

mod brute_force;
mod relaxed;

pub use brute_force::{brute_force_integer, brute_force_integer_with_limit, DEFAULT_BIT_LIMIT};
pub use relaxed::{centralized_relaxed, RelaxedSolution};
