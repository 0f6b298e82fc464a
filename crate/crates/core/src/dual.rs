//! LiquidMAAS: synchronous primal sweeps and projected subgradient price updates.
//!
//! Every iteration each user picks its helpers against the current prices
//! ([`primal::solve_user`]), then each user moves its ingress price along its
//! aperture slack and each cell moves its egress price along its backhaul
//! headroom. Cells only need the requests they receive and users only their
//! own helpers' prices, so the updates are local even though this runs in one
//! process.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primal::{self, kkt_residual, user_lagrangian, PriceState};
use crate::problem::{egress_demand, objective, residuals, SharingAllocation};
use crate::scenario::SharingProblem;
use crate::units::fmt_sig;
use crate::{CellId, UserId};

// Below this many users the sweep runs on the calling thread.
const PARALLEL_SWEEP_MIN_USERS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceMode {
    /// `|L̂_R(k) − L_R(k)| < ε₁` for all users and `|Δ_i| < ε₂` for all cells.
    Paper,
    /// Primal feasibility, complementary slackness and per-user optimality.
    #[default]
    Kkt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    Constant,
    /// `ν_t = ν / √t`.
    #[default]
    InverseSqrt,
}

impl StepSchedule {
    /// Step size for iteration `t ≥ 1`.
    pub fn step(self, nu: f64, t: usize) -> f64 {
        match self {
            StepSchedule::Constant => nu,
            StepSchedule::InverseSqrt => nu / (t as f64).sqrt(),
        }
    }
}

/// Which primal point is tested for convergence and returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimalRecovery {
    /// The subproblem solution at the current prices.
    LastIterate,
    /// Step-weighted averages of the recent subproblem solutions and prices,
    /// each user and cell averaging its own values. Needed when the optimum
    /// puts two of a user's helpers at the same metric, or when the step is
    /// too coarse for the price scale: the iterates then cycle while their
    /// averages converge.
    #[default]
    Averaged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub nu: f64,
    /// Initial egress price ε.
    pub epsilon_init: f64,
    pub max_iters: usize,
    /// Ingress tolerance ε₁.
    pub eps1: f64,
    /// Egress tolerance ε₂ (absolute, in bandwidth units).
    pub eps2: f64,
    pub convergence_mode: ConvergenceMode,
    pub schedule: StepSchedule,
    pub primal_recovery: PrimalRecovery,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            nu: 0.005,
            epsilon_init: 1e-3,
            max_iters: 65_536,
            eps1: 1e-3,
            eps2: 1e-3,
            convergence_mode: ConvergenceMode::Kkt,
            schedule: StepSchedule::InverseSqrt,
            primal_recovery: PrimalRecovery::Averaged,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::param("nu", format!("{} must be positive", self.nu)));
        }
        if !(self.epsilon_init > 0.0) {
            return Err(Error::param("epsilon_init", format!("{} must be positive", self.epsilon_init)));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if !(self.eps1 > 0.0 && self.eps2 > 0.0) {
            return Err(Error::param("eps1/eps2", "tolerances must be positive"));
        }
        Ok(())
    }
}

/// Per-iteration history of a run. Every trace has `iterations` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    /// `egress_demand_trace[t][i]`: demand on cell `i` at iteration `t`.
    pub egress_demand_trace: Vec<Vec<f64>>,
    pub egress_violation_trace: Vec<f64>,
    pub ingress_violation_trace: Vec<f64>,
    /// Larger of the egress and ingress violations.
    pub max_violation_trace: Vec<f64>,
    /// Lagrangian dual function at the prices of each iteration.
    pub dual_trace: Vec<f64>,
    pub converged: bool,
    /// Prices the returned allocation was computed against.
    pub final_prices: PriceState,
}

/// `λ_k ← max(λ_k − ν (L_eff(k) − L̂_R(k)), 0)` with `ν = prices.nu`.
pub fn update_ingress_price(prices: &mut PriceState, user: UserId, l_eff: f64, selected_count: f64) -> f64 {
    let updated = (prices.lambda[user] - prices.nu * (l_eff - selected_count)).max(0.0);
    prices.lambda[user] = updated;
    updated
}

/// `Δ_i = L_T̄ − Σ_{l≠i} Σ_{m∈N_T(i,l)} β_m x_{i→l}^m`.
pub fn egress_headroom(problem: &SharingProblem, allocation: &SharingAllocation, cell: CellId) -> f64 {
    let demand: f64 = problem
        .helped_by(cell)
        .iter()
        .map(|&k| problem.beta(k) * allocation.get(cell, k).unwrap_or(0.0))
        .sum();
    problem.l_t_bar() - demand
}

/// `ψ_i ← max(ψ_i − ν Δ_i, 0)` with `ν = prices.nu`.
pub fn update_egress_price(prices: &mut PriceState, cell: CellId, headroom: f64) -> f64 {
    let updated = (prices.psi[cell] - prices.nu * headroom).max(0.0);
    prices.psi[cell] = updated;
    updated
}

/// Stopping test for an allocation that is primal-optimal for `prices`.
pub fn check_convergence(
    problem: &SharingProblem,
    allocation: &SharingAllocation,
    prices: &PriceState,
    config: &SolverConfig,
) -> bool {
    let demand = egress_demand(problem, allocation);
    match config.convergence_mode {
        ConvergenceMode::Paper => {
            let ingress_ok = (0..problem.num_users())
                .all(|k| (allocation.selected_count(k) - problem.l_r(k) as f64).abs() < config.eps1);
            let egress_ok = demand.iter().all(|d| (problem.l_t_bar() - d).abs() < config.eps2);
            ingress_ok && egress_ok
        }
        ConvergenceMode::Kkt => {
            let r = residuals(problem, allocation);
            if r.max_egress_violation() > config.eps2 || r.max_ingress_violation() > config.eps1 {
                return false;
            }
            let cells_ok = demand
                .iter()
                .enumerate()
                .all(|(i, d)| prices.psi[i] <= config.eps2 || (problem.l_t_bar() - d).abs() <= config.eps2);
            if !cells_ok {
                return false;
            }
            (0..problem.num_users()).all(|k| {
                let slack = problem.l_eff(k) as f64 - allocation.selected_count(k);
                (prices.lambda[k] <= config.eps1 || slack <= config.eps1)
                    && kkt_residual(problem, prices, allocation, k) <= config.eps1
            })
        }
    }
}

/// Lagrangian dual function at `prices`, given the primal maximiser `allocation`.
pub fn dual_value(problem: &SharingProblem, prices: &PriceState, allocation: &SharingAllocation) -> f64 {
    let users: f64 = (0..problem.num_users())
        .map(|k| {
            user_lagrangian(problem, prices, k, allocation.user_entries(k)) + prices.lambda[k] * problem.l_eff(k) as f64
        })
        .sum();
    users + problem.l_t_bar() * prices.psi.iter().sum::<f64>()
}

/// Solves every user's subproblem against frozen prices.
pub fn primal_sweep(problem: &SharingProblem, prices: &PriceState, allocation: &mut SharingAllocation) {
    let results: Vec<_> = if problem.num_users() >= PARALLEL_SWEEP_MIN_USERS {
        (0..problem.num_users()).into_par_iter().map(|k| primal::solve_user(problem, prices, k)).collect()
    } else {
        (0..problem.num_users()).map(|k| primal::solve_user(problem, prices, k)).collect()
    };
    for r in &results {
        primal::apply(r, allocation);
    }
}

/// Step-weighted average over a window covering the last quarter to half of
/// the iterations: blocks double in length and the average spans the
/// previous block plus the current one.
struct TailAverage {
    prev: Vec<f64>,
    prev_weight: f64,
    cur: Vec<f64>,
    cur_weight: f64,
    block_end: usize,
}

impl TailAverage {
    fn new(len: usize) -> Self {
        TailAverage { prev: vec![0.0; len], prev_weight: 0.0, cur: vec![0.0; len], cur_weight: 0.0, block_end: 2 }
    }

    fn push(&mut self, t: usize, values: impl Iterator<Item = f64>, weight: f64) {
        if t >= self.block_end {
            std::mem::swap(&mut self.prev, &mut self.cur);
            self.prev_weight = self.cur_weight;
            self.cur.iter_mut().for_each(|v| *v = 0.0);
            self.cur_weight = 0.0;
            self.block_end *= 2;
        }
        for (acc, x) in self.cur.iter_mut().zip(values) {
            *acc += weight * x;
        }
        self.cur_weight += weight;
    }

    fn average(&self) -> impl Iterator<Item = f64> + '_ {
        let total = self.prev_weight + self.cur_weight;
        self.prev.iter().zip(&self.cur).map(move |(a, b)| (a + b) / total)
    }
}

/// Running tail averages of the allocation and of the prices.
struct Ergodic {
    allocation: TailAverage,
    prices: TailAverage,
}

impl Ergodic {
    fn new(allocation: &SharingAllocation, prices: &PriceState) -> Self {
        Ergodic {
            allocation: TailAverage::new(allocation.iter().count()),
            prices: TailAverage::new(prices.psi.len() + prices.lambda.len()),
        }
    }

    fn push(&mut self, t: usize, allocation: &SharingAllocation, prices: &PriceState, weight: f64) {
        self.allocation.push(t, allocation.iter().map(|e| e.2), weight);
        self.prices.push(t, prices.psi.iter().chain(&prices.lambda).copied(), weight);
    }

    fn average(&self, shape: &SharingAllocation, prices: &PriceState) -> (SharingAllocation, PriceState) {
        let mut out = shape.clone();
        let mut values = self.allocation.average();
        for k in 0..out.num_users() {
            for slot in out.user_entries_mut(k) {
                slot.1 = values.next().expect("shape matches").clamp(0.0, 1.0);
            }
        }
        let mut avg = prices.clone();
        let mut values = self.prices.average();
        for p in avg.psi.iter_mut().chain(avg.lambda.iter_mut()) {
            *p = values.next().expect("shape matches").max(0.0);
        }
        (out, avg)
    }
}

/// With `L_T̄ = 0` only `x = 0` is feasible. These egress prices lift every
/// helper's metric to at least `1/g` at `x = 0`, which makes it the sweep's
/// answer and certifies it.
fn zero_budget_prices(problem: &SharingProblem, nu: f64) -> PriceState {
    let mut prices = PriceState::zeros(problem, nu);
    for k in 0..problem.num_users() {
        let g0 = 1.0 + problem.scenario().serving_sinr(k);
        for &i in problem.ingress_nbhd(k) {
            prices.psi[i] = prices.psi[i].max(problem.weight(k) * problem.sinr(i, k) / g0);
        }
    }
    prices
}

/// Runs LiquidMAAS.
///
/// Starts from `ψ_i = ε`, `λ_k = 0` (closed-form prices when `L_T̄ = 0`) and iterates until
/// [`check_convergence`] holds or `max_iters` sweeps have run. On convergence
/// the last allocation is returned; otherwise the best iterate seen, where an
/// iterate within tolerances beats one outside them and ties go to the higher
/// objective (or the smaller violation).
pub fn run(problem: &SharingProblem, config: &SolverConfig) -> Result<(SharingAllocation, SolverReport)> {
    config.validate()?;
    let mut prices = if problem.l_t_bar() == 0.0 {
        zero_budget_prices(problem, config.nu)
    } else {
        PriceState::initial(problem, config.epsilon_init, config.nu)
    };
    let mut allocation = SharingAllocation::zeros(problem);
    let mut report = SolverReport {
        iterations: 0,
        objective_trace: Vec::new(),
        egress_demand_trace: Vec::new(),
        egress_violation_trace: Vec::new(),
        ingress_violation_trace: Vec::new(),
        max_violation_trace: Vec::new(),
        dual_trace: Vec::new(),
        converged: false,
        final_prices: prices.clone(),
    };
    let mut best: Option<(bool, f64, f64, SharingAllocation, PriceState)> = None;
    let mut ergodic = Ergodic::new(&allocation, &prices);

    for t in 1..=config.max_iters {
        primal_sweep(problem, &prices, &mut allocation);
        // Price updates always use the subproblem solution; `reported` is what
        // is traced, tested and returned.
        let iterate_demand = egress_demand(problem, &allocation);
        let (reported, reported_prices) = match config.primal_recovery {
            PrimalRecovery::LastIterate => (allocation.clone(), prices.clone()),
            PrimalRecovery::Averaged => {
                ergodic.push(t, &allocation, &prices, config.schedule.step(config.nu, t));
                ergodic.average(&allocation, &prices)
            }
        };

        let demand = egress_demand(problem, &reported);
        let egress_violation = demand.iter().fold(0.0f64, |m, d| m.max(d - problem.l_t_bar()));
        let ingress_violation = (0..problem.num_users())
            .fold(0.0f64, |m, k| m.max(reported.selected_count(k) - problem.l_a() as f64));
        let obj = objective(problem, &reported);
        report.iterations = t;
        report.objective_trace.push(obj);
        report.egress_violation_trace.push(egress_violation);
        report.ingress_violation_trace.push(ingress_violation);
        report.max_violation_trace.push(egress_violation.max(ingress_violation));
        report.dual_trace.push(dual_value(problem, &prices, &allocation));

        if check_convergence(problem, &reported, &reported_prices, config) {
            report.egress_demand_trace.push(demand);
            report.converged = true;
            report.final_prices = reported_prices;
            return Ok((reported, report));
        }

        let within = egress_violation <= config.eps2 && ingress_violation <= config.eps1;
        let violation = egress_violation.max(ingress_violation);
        let better = match &best {
            None => true,
            Some((b_within, b_obj, b_viol, ..)) => match (within, *b_within) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => obj > *b_obj,
                (false, false) => violation < *b_viol,
            },
        };
        if better {
            best = Some((within, obj, violation, reported, reported_prices));
        }

        prices.nu = config.schedule.step(config.nu, t);
        for k in 0..problem.num_users() {
            update_ingress_price(&mut prices, k, problem.l_eff(k) as f64, allocation.selected_count(k));
        }
        for (i, d) in iterate_demand.iter().enumerate() {
            update_egress_price(&mut prices, i, problem.l_t_bar() - d);
        }
        report.egress_demand_trace.push(demand);
    }

    let (_, _, _, best_alloc, best_prices) = best.expect("at least one iteration");
    report.final_prices = best_prices;
    Ok((best_alloc, report))
}

/// Writes `iter,objective,max_egress_violation,max_ingress_violation,demand_0,...` rows.
pub fn write_trace_csv<W: Write>(report: &SolverReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let num_cells = report.egress_demand_trace.first().map_or(0, Vec::len);
    let mut header = vec![
        "iter".to_string(),
        "objective".to_string(),
        "max_egress_violation".to_string(),
        "max_ingress_violation".to_string(),
    ];
    header.extend((0..num_cells).map(|i| format!("demand_{i}")));
    w.write_record(&header)?;
    for t in 0..report.iterations {
        let mut row = vec![
            (t + 1).to_string(),
            fmt_sig(report.objective_trace[t], 12),
            fmt_sig(report.egress_violation_trace[t], 12),
            fmt_sig(report.ingress_violation_trace[t], 12),
        ];
        row.extend(report.egress_demand_trace[t].iter().map(|&d| fmt_sig(d, 12)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}
