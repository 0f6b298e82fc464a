use crate::error::{Error, Result};
use crate::problem::{objective, SharingAllocation};
use crate::scenario::SharingProblem;

/// Instances with more sharing bits than this are refused unless forced.
pub const DEFAULT_BIT_LIMIT: usize = 30;

const EGRESS_SLOP: f64 = 1e-12;

struct UserOption {
    utility: f64,
    mask: u64,
}

struct Search<'a> {
    problem: &'a SharingProblem,
    order: Vec<usize>,
    options: Vec<Vec<UserOption>>,
    // suffix_best[d]: sum of best utilities of users order[d..]
    suffix_best: Vec<f64>,
    used: Vec<f64>,
    chosen: Vec<u64>,
    best_value: f64,
    best_choice: Vec<u64>,
}

impl Search<'_> {
    fn fits(&self, user: usize, mask: u64) -> bool {
        let beta = self.problem.beta(user);
        self.problem
            .ingress_nbhd(user)
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .all(|(_, &i)| self.used[i] + beta <= self.problem.l_t_bar() + EGRESS_SLOP)
    }

    fn charge(&mut self, user: usize, mask: u64, sign: f64) {
        let beta = self.problem.beta(user);
        for (b, &i) in self.problem.ingress_nbhd(user).iter().enumerate() {
            if mask >> b & 1 == 1 {
                self.used[i] += sign * beta;
            }
        }
    }

    fn dfs(&mut self, depth: usize, value: f64) {
        if depth == self.order.len() {
            if value > self.best_value {
                self.best_value = value;
                self.best_choice = self.chosen.clone();
            }
            return;
        }
        if value + self.suffix_best[depth] <= self.best_value {
            return;
        }
        let user = self.order[depth];
        for idx in 0..self.options[user].len() {
            let (utility, mask) = (self.options[user][idx].utility, self.options[user][idx].mask);
            if value + utility + self.suffix_best[depth + 1] <= self.best_value {
                // Options are sorted by utility, so nothing later can help either.
                break;
            }
            if !self.fits(user, mask) {
                continue;
            }
            self.charge(user, mask, 1.0);
            self.chosen[user] = mask;
            self.dfs(depth + 1, value + utility);
            self.charge(user, mask, -1.0);
        }
        self.chosen[user] = 0;
    }
}

/// Exact optimum of the integer program (x ∈ {0, 1}) within the default bit limit.
pub fn brute_force_integer(problem: &SharingProblem) -> Result<(SharingAllocation, f64)> {
    brute_force_integer_with_limit(problem, Some(DEFAULT_BIT_LIMIT))
}

/// Exact integer optimum; `limit = None` forces the search on any size.
///
/// Each user's subsets of `N_R(k)` with at most `L_A` members are enumerated
/// and sorted by utility. A depth-first search then assigns one subset per
/// user, skipping subsets that overflow a helper's egress budget and pruning
/// branches whose optimistic completion cannot beat the incumbent.
pub fn brute_force_integer_with_limit(
    problem: &SharingProblem,
    limit: Option<usize>,
) -> Result<(SharingAllocation, f64)> {
    let bits = problem.num_sharing_vars();
    if let Some(limit) = limit {
        if bits > limit {
            return Err(Error::InstanceTooLarge { bits, limit });
        }
    }
    if let Some(k) = (0..problem.num_users()).find(|&k| problem.l_r(k) >= 64) {
        return Err(Error::InstanceTooLarge { bits: problem.l_r(k), limit: 63 });
    }

    let options: Vec<Vec<UserOption>> = (0..problem.num_users())
        .map(|k| {
            let nbhd = problem.ingress_nbhd(k);
            let scale = problem.weight(k) * problem.beta(k);
            let base = 1.0 + problem.scenario().serving_sinr(k);
            let mut opts: Vec<UserOption> = (0u64..1 << nbhd.len())
                .filter(|m| m.count_ones() as usize <= problem.l_a())
                .map(|mask| {
                    let g = nbhd
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .fold(base, |g, (_, &i)| g + problem.sinr(i, k));
                    UserOption { utility: scale * g.ln(), mask }
                })
                .collect();
            opts.sort_by(|a, b| b.utility.total_cmp(&a.utility).then(a.mask.cmp(&b.mask)));
            opts
        })
        .collect();

    // Users whose choice matters most first: widest spread between best and
    // no sharing.
    let mut order: Vec<usize> = (0..problem.num_users()).collect();
    let spread = |k: usize| {
        let best = options[k][0].utility;
        let none = options[k].iter().find(|o| o.mask == 0).map_or(best, |o| o.utility);
        best - none
    };
    order.sort_by(|&a, &b| spread(b).total_cmp(&spread(a)).then(a.cmp(&b)));

    let mut suffix_best = vec![0.0; order.len() + 1];
    for d in (0..order.len()).rev() {
        suffix_best[d] = suffix_best[d + 1] + options[order[d]][0].utility;
    }

    let mut search = Search {
        problem,
        order,
        options,
        suffix_best,
        used: vec![0.0; problem.num_cells()],
        chosen: vec![0; problem.num_users()],
        best_value: f64::NEG_INFINITY,
        best_choice: vec![0; problem.num_users()],
    };
    search.dfs(0, 0.0);

    let mut allocation = SharingAllocation::zeros(problem);
    for (k, &mask) in search.best_choice.iter().enumerate() {
        for (b, &i) in problem.ingress_nbhd(k).iter().enumerate() {
            if mask >> b & 1 == 1 {
                allocation.set(i, k, 1.0)?;
            }
        }
    }
    let value = objective(problem, &allocation);
    Ok((allocation, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::no_comp;
    use crate::problem::is_feasible;
    use crate::scenario::presets::{fig1_problem, synthetic_problem, SyntheticParams};
    use crate::scenario::{build_neighborhoods, presets::fig1_scenario};
    use crate::test_support::single_user;

    #[test]
    fn picks_strongest_helper_under_aperture_one() {
        let p = single_user(10.0, &[5.0, 2.0], 1, 10.0);
        let (a, v) = brute_force_integer(&p).unwrap();
        assert_eq!(a.user_entries(0), &[(1, 1.0), (2, 0.0)]);
        assert!((v - 16f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn empty_neighbourhoods_give_no_comp() {
        let p = build_neighborhoods(fig1_scenario(), 1e9, 3, 1.0).unwrap();
        let (a, v) = brute_force_integer(&p).unwrap();
        assert_eq!(a, no_comp(&p));
        assert_eq!(v, objective(&p, &no_comp(&p)));
    }

    #[test]
    fn rejects_large_instances() {
        let p = synthetic_problem(&SyntheticParams::default(), 1);
        assert!(p.num_sharing_vars() > DEFAULT_BIT_LIMIT);
        assert!(matches!(brute_force_integer(&p), Err(Error::InstanceTooLarge { .. })));
    }

    /// Plain enumeration of every 0/1 assignment, no pruning.
    fn exhaustive(problem: &SharingProblem) -> f64 {
        let vars: Vec<(usize, usize)> = (0..problem.num_users())
            .flat_map(|k| problem.ingress_nbhd(k).iter().map(move |&i| (i, k)))
            .collect();
        let mut best = f64::NEG_INFINITY;
        for mask in 0u64..1 << vars.len() {
            let mut a = SharingAllocation::zeros(problem);
            for (b, &(i, k)) in vars.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    a.set(i, k, 1.0).unwrap();
                }
            }
            if is_feasible(problem, &a, 1e-12) {
                best = best.max(objective(problem, &a));
            }
        }
        best
    }

    #[test]
    fn fig1_matches_exhaustive_enumeration() {
        for (l_a, l_t_bar) in [(1, 0.5), (2, 0.8), (2, 1.0), (1, 2.0)] {
            let p = fig1_problem(l_a, l_t_bar);
            let (a, v) = brute_force_integer(&p).unwrap();
            assert!(is_feasible(&p, &a, 1e-12));
            assert!((v - exhaustive(&p)).abs() < 1e-12, "L_A={l_a} L_T={l_t_bar}");
        }
    }

    #[test]
    fn two_users_competing_for_one_helper() {
        use crate::scenario::{CellSite, NetworkScenario, Point, SinrMatrix, User};
        // Cell 2 can help either user but only has backhaul for one (β = 0.5 each).
        let cells = (0..3)
            .map(|id| CellSite { id, site: id, position: Point::ORIGIN, num_antennas: 1, azimuth_deg: None })
            .collect();
        let users = (0..2)
            .map(|id| User { id, position: Point::ORIGIN, serving_cell: id, beta: 0.5, weight: 1.0 })
            .collect();
        let sinr = SinrMatrix::from_user_rows(3, &[vec![10.0, 0.0, 4.0], vec![0.0, 2.0, 3.0]]).unwrap();
        let s = NetworkScenario::new(cells, users, sinr).unwrap();
        let p = build_neighborhoods(s, 0.1, 1, 0.5).unwrap();
        // By hand: helping user 0 gains 0.5·ln(15/11) ≈ 0.155, helping user 1
        // gains 0.5·ln(6/3) ≈ 0.347, helping both overflows the backhaul.
        let (a, v) = brute_force_integer(&p).unwrap();
        assert_eq!(a.get(2, 0), Some(0.0));
        assert_eq!(a.get(2, 1), Some(1.0));
        assert!((v - (0.5 * 11f64.ln() + 0.5 * 6f64.ln())).abs() < 1e-14);
    }
}
