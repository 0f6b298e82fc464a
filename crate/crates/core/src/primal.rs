//! Per-user Lagrangian subproblem.
//!
//! With egress prices `ψ` and ingress prices `λ` frozen, user `k` maximises
//!
//! ```text
//! ω_k β_k ln g(x_k) − Σ_i (β_k ψ_i + λ_k) x_i      over x_k ∈ [0,1]^{N_R(k)}
//! ```
//!
//! Dividing the stationarity condition by `ω_k β_k S_i` gives `1/g = m_{i,k}`
//! for an interior entry, with the metric `m_{i,k} = (β_k ψ_i + λ_k) / (ω_k β_k S_i)`.
//! Sorting helpers by metric, the maximiser is a prefix of ones, at most one
//! fractional entry and zeros after it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{combined_snr, SharingAllocation};
use crate::scenario::SharingProblem;
use crate::{CellId, UserId};

/// Fractional values below this are reported as 0.
pub const SNAP_TO_ZERO: f64 = 1e-12;

/// Egress prices per cell, ingress prices per user and the step size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceState {
    pub psi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub nu: f64,
}

impl PriceState {
    /// `ψ_i = epsilon` for every cell, `λ_k = 0` for every user.
    pub fn initial(problem: &SharingProblem, epsilon: f64, nu: f64) -> Self {
        PriceState { psi: vec![epsilon; problem.num_cells()], lambda: vec![0.0; problem.num_users()], nu }
    }

    pub fn zeros(problem: &SharingProblem, nu: f64) -> Self {
        Self::initial(problem, 0.0, nu)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.psi.iter().chain(&self.lambda).all(|&p| p >= 0.0)
    }
}

/// Maximiser of one user's Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPrimalResult {
    pub user: UserId,
    /// `(helper, x)` in ascending helper id, one per `N_R(k)` entry.
    pub values: Vec<(CellId, f64)>,
    /// Helpers with `x > 0`, in metric order.
    pub active_set: Vec<CellId>,
    /// The helper with `0 < x < 1`, if any.
    pub fractional: Option<CellId>,
}

#[inline]
fn metric_value(problem: &SharingProblem, prices: &PriceState, helper: CellId, user: UserId, sinr: f64) -> f64 {
    let beta = problem.beta(user);
    (beta * prices.psi[helper] + prices.lambda[user]) / (problem.weight(user) * beta * sinr)
}

/// `m_{i,k} = (β_k ψ_i + λ_k) / (ω_k β_k S_{i→σ(k)}^k)`.
pub fn metric(problem: &SharingProblem, prices: &PriceState, helper: CellId, user: UserId) -> Result<f64> {
    let sinr = problem.sinr(helper, user);
    if !(sinr > 0.0) {
        return Err(Error::NonPositiveSinr { helper, user, sinr });
    }
    Ok(metric_value(problem, prices, helper, user, sinr))
}

/// Helpers of `user` with their metrics, sorted by `(metric, helper id)`.
pub fn ordered_helpers(problem: &SharingProblem, prices: &PriceState, user: UserId) -> Vec<(CellId, f64)> {
    let mut order: Vec<(CellId, f64)> = problem
        .ingress_nbhd(user)
        .iter()
        .map(|&i| (i, metric_value(problem, prices, i, user, problem.sinr(i, user))))
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    order
}

/// Exact maximiser of the user's Lagrangian over the box.
///
/// Helpers are added in metric order with `x = 1` while
/// `1 / (1 + S_serving + Σ_{p≤n} S_{i_p}) > m_{i_n}`. At the first helper that
/// fails, `x = (1/m − g_{n−1}) / S` clipped to `[0, 1]`, and every later helper
/// gets 0. All-zero metrics select every helper.
pub fn solve_user(problem: &SharingProblem, prices: &PriceState, user: UserId) -> UserPrimalResult {
    let order = ordered_helpers(problem, prices, user);
    let mut chosen: Vec<(CellId, f64)> = Vec::with_capacity(order.len());
    let mut fractional = None;
    let mut g = 1.0 + problem.scenario().serving_sinr(user);
    for &(helper, m) in &order {
        let s = problem.sinr(helper, user);
        if 1.0 / (g + s) > m {
            g += s;
            chosen.push((helper, 1.0));
            continue;
        }
        let y = ((1.0 / m - g) / s).clamp(0.0, 1.0);
        if y > SNAP_TO_ZERO {
            chosen.push((helper, y));
            if y < 1.0 {
                fractional = Some(helper);
            }
        }
        break;
    }
    let active_set = chosen.iter().map(|c| c.0).collect();
    let values = problem
        .ingress_nbhd(user)
        .iter()
        .map(|&i| (i, chosen.iter().find(|c| c.0 == i).map_or(0.0, |c| c.1)))
        .collect();
    UserPrimalResult { user, values, active_set, fractional }
}

/// Writes `result` into the allocation row of its user.
pub fn apply(result: &UserPrimalResult, allocation: &mut SharingAllocation) {
    let row = allocation.user_entries_mut(result.user);
    for (slot, &(i, x)) in row.iter_mut().zip(&result.values) {
        debug_assert_eq!(slot.0, i);
        slot.1 = x;
    }
}

/// The user's Lagrangian without constant terms:
/// `ω β ln g(x) − Σ_i (β ψ_i + λ) x_i` for the given `(helper, x)` values.
pub fn user_lagrangian(problem: &SharingProblem, prices: &PriceState, user: UserId, values: &[(CellId, f64)]) -> f64 {
    let beta = problem.beta(user);
    let mut g = 1.0 + problem.scenario().serving_sinr(user);
    let mut cost = 0.0;
    for &(i, x) in values {
        g += problem.sinr(i, user) * x;
        cost += (beta * prices.psi[i] + prices.lambda[user]) * x;
    }
    problem.weight(user) * beta * g.ln() - cost
}

/// Largest violation of the optimality sign pattern for one user.
///
/// An entry at 1 needs `1/g ≥ m`, an entry at 0 needs `1/g ≤ m`, and an
/// interior entry needs `1/g = m`.
pub fn kkt_residual(problem: &SharingProblem, prices: &PriceState, allocation: &SharingAllocation, user: UserId) -> f64 {
    let inv_g = 1.0 / combined_snr(problem, user, allocation);
    allocation.user_entries(user).iter().fold(0.0, |worst, &(i, x)| {
        let m = metric_value(problem, prices, i, user, problem.sinr(i, user));
        let v = if x >= 1.0 {
            m - inv_g
        } else if x <= 0.0 {
            inv_g - m
        } else {
            (inv_g - m).abs()
        };
        worst.max(v)
    })
}
