//! Uplink CoMP helper-cell allocation.
//!
//! A user's uplink signal is combined at its serving cell and, optionally, at
//! helper cells that forward their locally combined signal over the backhaul.
//! Combining is max-ratio, so the post-combining SINR of user `k` is the sum of
//! the serving SINR and the SINRs of the granted helpers, each weighted by the
//! shared bandwidth fraction `x`. The network picks the sharing variables to
//! maximise the weighted sum of `log(1 + SINR)` subject to
//!
//! * an **ingress** (aperture) cap `L_A` on the number of helpers per user, and
//! * an **egress** (backhaul) cap `L_T̄` on the bandwidth each cell may forward.
//!
//! The relaxed problem is convex. [`dual::run`] solves it with a distributed
//! price iteration: every helper cell publishes an egress price, every user
//! keeps an ingress price, and each user picks its helpers by a threshold rule
//! over a price-to-SINR metric ([`primal::solve_user`]).
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`scenario`] | hex layout, user drop, SINR model, neighbourhoods, scenario files |
//! | [`problem`] | allocations, objective, gradient, constraint residuals, CSV export |
//! | [`primal`] | per-user Lagrangian subproblem |
//! | [`dual`] | the price iteration (LiquidMAAS) |
//! | [`baselines`] | No CoMP, greedy MAAS, randomized egress control |
//! | [`oracles`] | brute-force integer solver and centralized relaxed solver |
//! | [`experiment`] | experiment drivers behind the `liquidmaas` binary |

pub mod baselines;
pub mod dual;
pub mod error;
pub mod experiment;
pub mod oracles;
pub mod primal;
pub mod problem;
pub mod scenario;
pub mod units;

#[cfg(test)]
mod test_support;

pub use dual::{ConvergenceMode, PrimalRecovery, SolverConfig, SolverReport, StepSchedule};
pub use error::{Error, Result};
pub use primal::{PriceState, UserPrimalResult};
pub use problem::{ConstraintResiduals, SharingAllocation};
pub use scenario::{CellSite, NetworkScenario, Point, RadioParams, SharingProblem, SinrMatrix, User};

/// Index of a cell in `0..J`.
pub type CellId = usize;
/// Index of a user in `0..K`.
pub type UserId = usize;
