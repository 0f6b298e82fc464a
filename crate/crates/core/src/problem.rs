//! Allocations, the weighted-sum-rate objective and constraint residuals.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::SharingProblem;
use crate::units::fmt_sig;
use crate::{CellId, UserId};

/// Default tolerance of [`is_feasible`].
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-6;

/// Sharing variables `x_{i→σ(k)}^k`, stored per user and keyed by helper cell.
///
/// An allocation built from a problem holds exactly one entry per
/// `(i, k)` with `i ∈ N_R(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SharingAllocation {
    entries: Vec<Vec<(CellId, f64)>>,
}

impl SharingAllocation {
    pub fn zeros(problem: &SharingProblem) -> Self {
        Self::from_fn(problem, |_, _| 0.0)
    }

    pub fn from_fn(problem: &SharingProblem, mut f: impl FnMut(CellId, UserId) -> f64) -> Self {
        let entries = (0..problem.num_users())
            .map(|k| problem.ingress_nbhd(k).iter().map(|&i| (i, f(i, k))).collect())
            .collect();
        SharingAllocation { entries }
    }

    pub fn num_users(&self) -> usize {
        self.entries.len()
    }

    /// `(helper, x)` pairs of one user, ascending helper id.
    pub fn user_entries(&self, user: UserId) -> &[(CellId, f64)] {
        &self.entries[user]
    }

    pub(crate) fn user_entries_mut(&mut self, user: UserId) -> &mut [(CellId, f64)] {
        &mut self.entries[user]
    }

    /// Value of `x_{helper→σ(user)}^user`, or `None` if `helper ∉ N_R(user)`.
    pub fn get(&self, helper: CellId, user: UserId) -> Option<f64> {
        let row = self.entries.get(user)?;
        row.binary_search_by_key(&helper, |e| e.0).ok().map(|pos| row[pos].1)
    }

    /// Sets one entry. The helper must be in the user's ingress neighbourhood
    /// and the value in [0, 1].
    pub fn set(&mut self, helper: CellId, user: UserId, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfBox { helper, user, value });
        }
        let row = self.entries.get_mut(user).ok_or(Error::UnknownEntry { helper, user })?;
        let pos = row
            .binary_search_by_key(&helper, |e| e.0)
            .map_err(|_| Error::UnknownEntry { helper, user })?;
        row[pos].1 = value;
        Ok(())
    }

    /// `(helper, user, x)` for every entry.
    pub fn iter(&self) -> impl Iterator<Item = (CellId, UserId, f64)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(k, row)| row.iter().map(move |&(i, x)| (i, k, x)))
    }

    /// `L̂_R(k) = Σ_i x_{i→σ(k)}^k`.
    pub fn selected_count(&self, user: UserId) -> f64 {
        self.entries[user].iter().map(|e| e.1).sum()
    }

    /// Entries strictly inside (0, 1) by more than `tol`.
    pub fn fractional_count(&self, user: UserId, tol: f64) -> usize {
        self.entries[user].iter().filter(|e| e.1 > tol && e.1 < 1.0 - tol).count()
    }

    /// `t·self + (1−t)·other`, entry by entry.
    pub fn blend(&self, other: &SharingAllocation, t: f64) -> SharingAllocation {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.iter().zip(b).map(|(&(i, xa), &(_, xb))| (i, t * xa + (1.0 - t) * xb)).collect())
            .collect();
        SharingAllocation { entries }
    }

    /// Checks that the keys match the problem's neighbourhoods and values are in the box.
    pub fn validate(&self, problem: &SharingProblem) -> Result<()> {
        if self.entries.len() != problem.num_users() {
            return Err(Error::InvalidScenario(format!(
                "allocation covers {} users, problem has {}",
                self.entries.len(),
                problem.num_users()
            )));
        }
        for (k, row) in self.entries.iter().enumerate() {
            let nbhd = problem.ingress_nbhd(k);
            if row.len() != nbhd.len() || row.iter().zip(nbhd).any(|(e, &i)| e.0 != i) {
                let helper = row.iter().map(|e| e.0).find(|i| !nbhd.contains(i)).unwrap_or(usize::MAX);
                return Err(Error::UnknownEntry { helper, user: k });
            }
            if let Some(&(helper, value)) = row.iter().find(|e| !(0.0..=1.0).contains(&e.1)) {
                return Err(Error::OutOfBox { helper, user: k, value });
            }
        }
        Ok(())
    }
}

/// `g(x_k) = 1 + S_serving + Σ_m S_{m→σ(k)}^k · x_m`.
pub fn combined_snr(problem: &SharingProblem, user: UserId, allocation: &SharingAllocation) -> f64 {
    let base = 1.0 + problem.scenario().serving_sinr(user);
    allocation.user_entries(user).iter().fold(base, |g, &(i, x)| g + problem.sinr(i, user) * x)
}

/// Weighted rate `ω_k β_k ln g(x_k)` of one user, in nats.
pub fn user_utility(problem: &SharingProblem, user: UserId, allocation: &SharingAllocation) -> f64 {
    problem.weight(user) * problem.beta(user) * combined_snr(problem, user, allocation).ln()
}

/// Weighted sum rate `Σ_k ω_k β_k ln g(x_k)`, in nats.
pub fn objective(problem: &SharingProblem, allocation: &SharingAllocation) -> f64 {
    (0..problem.num_users()).map(|k| user_utility(problem, k, allocation)).sum()
}

/// `∂objective/∂x_{i→σ(k)}^k = ω_k β_k S_{i→σ(k)}^k / g(x_k)`, in allocation layout.
pub fn gradient(problem: &SharingProblem, allocation: &SharingAllocation) -> SharingAllocation {
    let entries = (0..problem.num_users())
        .map(|k| {
            let scale = problem.weight(k) * problem.beta(k) / combined_snr(problem, k, allocation);
            allocation.user_entries(k).iter().map(|&(i, _)| (i, scale * problem.sinr(i, k))).collect()
        })
        .collect();
    SharingAllocation { entries }
}

/// β-weighted egress demand `Σ_j Σ_{k∈N_T(i,j)} β_k x_{i→j}^k` of every cell.
pub fn egress_demand(problem: &SharingProblem, allocation: &SharingAllocation) -> Vec<f64> {
    let mut demand = vec![0.0; problem.num_cells()];
    for (i, k, x) in allocation.iter() {
        demand[i] += problem.beta(k) * x;
    }
    demand
}

/// Signed slacks of the ingress and egress constraints; negative means violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    /// `L_A − Σ_i x_{i→σ(k)}^k` per user.
    pub ingress_slack: Vec<f64>,
    /// `L_T̄ − egress demand` per cell.
    pub egress_slack: Vec<f64>,
    /// Largest distance of any entry from [0, 1].
    pub box_violation: f64,
}

impl ConstraintResiduals {
    pub fn max_ingress_violation(&self) -> f64 {
        self.ingress_slack.iter().fold(0.0, |m, s| m.max(-s))
    }

    pub fn max_egress_violation(&self) -> f64 {
        self.egress_slack.iter().fold(0.0, |m, s| m.max(-s))
    }
}

pub fn residuals(problem: &SharingProblem, allocation: &SharingAllocation) -> ConstraintResiduals {
    let l_a = problem.l_a() as f64;
    let ingress_slack = (0..problem.num_users()).map(|k| l_a - allocation.selected_count(k)).collect();
    let egress_slack = egress_demand(problem, allocation).into_iter().map(|d| problem.l_t_bar() - d).collect();
    let box_violation = allocation.iter().fold(0.0f64, |m, (_, _, x)| m.max(-x).max(x - 1.0));
    ConstraintResiduals { ingress_slack, egress_slack, box_violation }
}

/// True iff every slack is at least `-tol` and the box is violated by at most `tol`.
pub fn is_feasible(problem: &SharingProblem, allocation: &SharingAllocation, tol: f64) -> bool {
    let r = residuals(problem, allocation);
    r.ingress_slack.iter().chain(&r.egress_slack).all(|&s| s >= -tol) && r.box_violation <= tol
}

#[derive(Debug, Serialize, Deserialize)]
struct AllocationRow {
    user_id: UserId,
    serving_cell: CellId,
    helper_cell: CellId,
    x: String,
}

/// Writes `user_id,serving_cell,helper_cell,x` rows, 12 significant digits.
pub fn write_allocation_csv<W: Write>(problem: &SharingProblem, allocation: &SharingAllocation, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, k, x) in allocation.iter() {
        w.serialize(AllocationRow {
            user_id: k,
            serving_cell: problem.scenario().serving_cell(k),
            helper_cell: i,
            x: fmt_sig(x, 12),
        })?;
    }
    w.flush().map_err(|e| Error::io("<allocation csv>", e))?;
    Ok(())
}

/// Reads rows written by [`write_allocation_csv`]. Missing entries are zero.
pub fn read_allocation_csv<R: Read>(problem: &SharingProblem, input: R) -> Result<SharingAllocation> {
    let mut allocation = SharingAllocation::zeros(problem);
    let mut r = csv::Reader::from_reader(input);
    for row in r.deserialize() {
        let row: AllocationRow = row?;
        if row.user_id >= problem.num_users() || problem.scenario().serving_cell(row.user_id) != row.serving_cell {
            return Err(Error::UnknownEntry { helper: row.helper_cell, user: row.user_id });
        }
        let x: f64 = row.x.trim().parse().map_err(|_| Error::Parse {
            path: "<allocation csv>".into(),
            reason: format!("bad sharing value `{}`", row.x),
        })?;
        allocation.set(row.helper_cell, row.user_id, x)?;
    }
    Ok(allocation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::presets::{fig1_problem, synthetic_problem, SyntheticParams};
    use crate::test_support::single_user;

    #[test]
    fn combined_snr_examples() {
        let p = single_user(10.0, &[5.0, 2.0], 3, 10.0);
        let zero = SharingAllocation::zeros(&p);
        assert_eq!(combined_snr(&p, 0, &zero), 11.0);
        let full = SharingAllocation::from_fn(&p, |_, _| 1.0);
        assert_eq!(combined_snr(&p, 0, &full), 18.0);
        let half = single_user(10.0, &[5.0], 3, 10.0);
        let x = SharingAllocation::from_fn(&half, |_, _| 0.5);
        assert_eq!(combined_snr(&half, 0, &x), 13.5);
    }

    #[test]
    fn objective_of_single_user_is_one_nat() {
        let p = single_user(std::f64::consts::E - 1.0, &[], 3, 1.0);
        let obj = objective(&p, &SharingAllocation::zeros(&p));
        assert!((obj - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fig1_zero_allocation_objective() {
        let p = fig1_problem(3, 1.0);
        let by_hand: f64 = (0..7)
            .map(|k| p.weight(k) * p.beta(k) * (1.0 + p.scenario().serving_sinr(k)).ln())
            .sum();
        let obj = objective(&p, &SharingAllocation::zeros(&p));
        assert!((obj - by_hand).abs() < 1e-14);
    }

    #[test]
    fn fig1_egress_violation() {
        let p = fig1_problem(3, 1.0);
        let mut a = SharingAllocation::zeros(&p);
        for user in [0, 1, 3] {
            a.set(1, user, 1.0).unwrap();
        }
        let r = residuals(&p, &a);
        assert!((r.egress_slack[1] + 1.0 / 3.0).abs() < 1e-15);
        assert!(!is_feasible(&p, &a, 1e-6));
        assert_eq!(r.max_egress_violation(), -r.egress_slack[1]);
    }

    #[test]
    fn zero_allocation_residuals() {
        let p = fig1_problem(2, 0.75);
        let a = SharingAllocation::zeros(&p);
        let r = residuals(&p, &a);
        assert!(r.ingress_slack.iter().all(|&s| s == 2.0));
        assert!(r.egress_slack.iter().all(|&s| s == 0.75));
        assert_eq!(r.box_violation, 0.0);
        assert!(is_feasible(&p, &a, 0.0));
    }

    #[test]
    fn tight_ingress_is_feasible() {
        let p = single_user(10.0, &[5.0, 2.0, 1.0], 3, 10.0);
        let a = SharingAllocation::from_fn(&p, |_, _| 1.0);
        let r = residuals(&p, &a);
        assert_eq!(r.ingress_slack[0], 0.0);
        assert!(is_feasible(&p, &a, 0.0));
    }

    #[test]
    fn tolerance_semantics() {
        let p = single_user(10.0, &[5.0], 1, 0.5 - 1e-9);
        let mut a = SharingAllocation::zeros(&p);
        a.set(1, 0, 0.5).unwrap();
        assert!(is_feasible(&p, &a, 1e-6));
        assert!(!is_feasible(&p, &a, 1e-10));
    }

    #[test]
    fn set_rejects_bad_entries() {
        let p = fig1_problem(3, 1.0);
        let mut a = SharingAllocation::zeros(&p);
        assert!(matches!(a.set(0, 0, 1.0), Err(Error::UnknownEntry { .. })));
        assert!(matches!(a.set(1, 0, 1.5), Err(Error::OutOfBox { .. })));
        assert_eq!(a.get(2, 0), None);
        assert_eq!(a.get(1, 0), Some(0.0));
    }

    #[test]
    fn csv_round_trip_reproduces_objective() {
        let p = synthetic_problem(&SyntheticParams::default(), 3);
        let a = SharingAllocation::from_fn(&p, |i, k| ((i * 7 + k * 13) % 10) as f64 / 9.0);
        let mut buf = Vec::new();
        write_allocation_csv(&p, &a, &mut buf).unwrap();
        let back = read_allocation_csv(&p, buf.as_slice()).unwrap();
        assert!((objective(&p, &back) - objective(&p, &a)).abs() < 1e-9);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("user_id,serving_cell,helper_cell,x\n"));
    }

    #[test]
    fn validate_catches_shape_mismatch() {
        let p = fig1_problem(3, 1.0);
        let other = single_user(10.0, &[5.0], 1, 1.0);
        assert!(SharingAllocation::zeros(&other).validate(&p).is_err());
        assert!(SharingAllocation::zeros(&p).validate(&p).is_ok());
    }
}
