//! Comparison schemes: No CoMP, SINR-greedy MAAS and randomized egress control.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::problem::SharingAllocation;
use crate::scenario::SharingProblem;
use crate::{CellId, UserId};

/// No sharing at all.
pub fn no_comp(problem: &SharingProblem) -> SharingAllocation {
    SharingAllocation::zeros(problem)
}

/// The `min(L_A, L_R(k))` helpers of `user` with the largest SINR, ties by cell id.
pub fn greedy_helpers(problem: &SharingProblem, user: UserId) -> Vec<CellId> {
    let mut helpers = problem.ingress_nbhd(user).to_vec();
    helpers.sort_by(|&a, &b| problem.sinr(b, user).total_cmp(&problem.sinr(a, user)).then(a.cmp(&b)));
    helpers.truncate(problem.l_eff(user));
    helpers
}

/// Every user takes its top-SINR helpers up to the aperture limit; the egress
/// limit is ignored.
pub fn greedy_maas(problem: &SharingProblem) -> SharingAllocation {
    let mut allocation = SharingAllocation::zeros(problem);
    for k in 0..problem.num_users() {
        for i in greedy_helpers(problem, k) {
            allocation.set(i, k, 1.0).expect("helper from the ingress neighbourhood");
        }
    }
    allocation
}

/// Users request their greedy helper sets; each helper cell serves its
/// requests in a seeded random order and grants them until the next one would
/// exceed `L_T̄`.
///
/// With `fractional_topup` the first request that does not fit receives the
/// remaining headroom as a fractional grant. Ungranted users do not re-request
/// elsewhere.
pub fn randomized_egress(problem: &SharingProblem, seed: u64, fractional_topup: bool) -> SharingAllocation {
    let mut requests: Vec<Vec<UserId>> = vec![Vec::new(); problem.num_cells()];
    for k in 0..problem.num_users() {
        for i in greedy_helpers(problem, k) {
            requests[i].push(k);
        }
    }
    let mut allocation = SharingAllocation::zeros(problem);
    for (cell, mut queue) in requests.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(cell as u64);
        queue.shuffle(&mut rng);
        let mut used = 0.0;
        for k in queue {
            let beta = problem.beta(k);
            if used + beta <= problem.l_t_bar() {
                used += beta;
                allocation.set(cell, k, 1.0).expect("requested helper");
                continue;
            }
            if fractional_topup {
                let x = ((problem.l_t_bar() - used) / beta).clamp(0.0, 1.0);
                if x > 0.0 {
                    allocation.set(cell, k, x).expect("requested helper");
                }
            }
            break;
        }
    }
    allocation
}
