//! Worked examples checked against values recomputed here from first
//! principles: geometry by trigonometry, objectives by hand sums, optima by
//! grid search or enumeration.

mod common;

use approx::assert_relative_eq;
use liquidmaas::baselines::{greedy_maas, no_comp, randomized_egress};
use liquidmaas::dual::{self, update_egress_price, update_ingress_price};
use liquidmaas::oracles::{brute_force_integer, centralized_relaxed};
use liquidmaas::primal::{metric, solve_user, PriceState};
use liquidmaas::problem::{combined_snr, objective, residuals, SharingAllocation};
use liquidmaas::scenario::generate_hex_layout;
use liquidmaas::scenario::presets::{fig1_problem, fig1_scenario, synthetic_problem, SyntheticParams};
use liquidmaas::{ConvergenceMode, PrimalRecovery, SolverConfig, StepSchedule};

#[test]
fn seven_site_layout_distances() {
    let cells = generate_hex_layout(7, 3, 100.0).unwrap();
    assert_eq!(cells.len(), 21);
    let mut sites: Vec<(f64, f64)> = Vec::new();
    for c in &cells {
        let p = (c.position.x, c.position.y);
        if !sites.iter().any(|s| (s.0 - p.0).hypot(s.1 - p.1) < 1e-9) {
            sites.push(p);
        }
    }
    assert_eq!(sites.len(), 7);
    let centre = sites.iter().copied().find(|s| s.0.hypot(s.1) < 1e-9).expect("a site at the origin");
    let ring: Vec<(f64, f64)> = sites.iter().copied().filter(|&s| s != centre).collect();
    for s in &ring {
        assert_relative_eq!(s.0.hypot(s.1), 100.0, epsilon = 1e-9);
    }
    // Six ring sites at 60° spacing: pairwise distances 100, 100√3 or 200.
    let mut counts = [0; 3];
    for a in 0..6 {
        for b in a + 1..6 {
            let d = (ring[a].0 - ring[b].0).hypot(ring[a].1 - ring[b].1);
            let idx = [100.0, 100.0 * 3f64.sqrt(), 200.0].iter().position(|e| (d - e).abs() < 1e-6).expect("hex distance");
            counts[idx] += 1;
        }
    }
    assert_eq!(counts, [6, 6, 3]);
}

#[test]
fn combined_snr_by_direct_evaluation() {
    let p = common::single_user(10.0, &[5.0, 2.0], 3, 10.0);
    let a = SharingAllocation::from_fn(&p, |_, _| 1.0);
    assert_eq!(combined_snr(&p, 0, &a), 1.0 + 10.0 + 5.0 + 2.0);
    let p = common::single_user(10.0, &[5.0], 3, 10.0);
    let a = SharingAllocation::from_fn(&p, |_, _| 0.5);
    assert_eq!(combined_snr(&p, 0, &a), 13.5);
}

#[test]
fn fig1_no_sharing_objective_is_a_seven_term_sum() {
    let p = fig1_problem(3, 1.0);
    let s = fig1_scenario();
    let hand: f64 = s.users().iter().map(|u| u.weight * u.beta * (1.0 + s.serving_sinr(u.id)).ln()).sum();
    assert_eq!(s.users().len(), 7);
    assert_relative_eq!(objective(&p, &no_comp(&p)), hand, max_relative = 1e-15);
}

#[test]
fn fig1_egress_slack_of_overloaded_cell() {
    // Cell 2 (index 1) forwards for users 1, 2 (β = ½) and 4 (β = ⅓).
    let p = fig1_problem(3, 1.0);
    let mut a = SharingAllocation::zeros(&p);
    for user in [0, 1, 3] {
        a.set(1, user, 1.0).unwrap();
    }
    let r = residuals(&p, &a);
    assert_relative_eq!(r.egress_slack[1], 1.0 - (0.5 + 0.5 + 1.0 / 3.0), epsilon = 1e-15);
    assert!(!liquidmaas::problem::is_feasible(&p, &a, 1e-6));
}

#[test]
fn metric_by_direct_evaluation() {
    // ω = 1, β = ½, ψ = 0.4, λ = 0.1, S = 2: (0.2 + 0.1)/(1·½·2).
    let p = common::problem(2, &[(0, 0.5, 1.0)], &[vec![10.0, 2.0]], 1e-3, 3, 1.0);
    let prices = PriceState { psi: vec![0.0, 0.4], lambda: vec![0.1], nu: 0.005 };
    assert_relative_eq!(metric(&p, &prices, 1, 0).unwrap(), 0.3, epsilon = 1e-15);
}

/// `ω β ln g − Σ c x` for a single user with `β = ω = 1`.
fn single_lagrangian(serving: f64, sinr: &[f64], cost: &[f64], x: &[f64]) -> f64 {
    let g = 1.0 + serving + sinr.iter().zip(x).map(|(s, x)| s * x).sum::<f64>();
    g.ln() - cost.iter().zip(x).map(|(c, x)| c * x).sum::<f64>()
}

#[test]
fn threshold_rule_matches_grid_search() {
    // With β = ω = 1 and λ = 0 the metric is ψ/S, so ψ = m·S.
    let cases: [(&[f64], &[f64]); 3] = [(&[5.0, 2.0], &[0.05, 0.2]), (&[5.0], &[0.04]), (&[5.0], &[0.08])];
    for (sinr, metrics) in cases {
        let p = common::single_user(10.0, sinr, 3, 10.0);
        let mut psi = vec![0.0];
        psi.extend(sinr.iter().zip(metrics).map(|(s, m)| s * m));
        let cost = psi[1..].to_vec();
        let prices = PriceState { psi, lambda: vec![0.0], nu: 0.005 };
        let r = solve_user(&p, &prices, 0);
        // Earlier helpers at 1, grid over the last one.
        let n = sinr.len();
        let (x_grid, _) = common::grid_argmax(1e-3, |x| {
            let mut v = vec![1.0; n];
            v[n - 1] = x;
            single_lagrangian(10.0, sinr, &cost, &v)
        });
        assert!((r.values[n - 1].1 - x_grid).abs() <= 1e-3, "{sinr:?}: {} vs {x_grid}", r.values[n - 1].1);
    }
    // The fractional case peaks at exactly 0.3.
    let p = common::single_user(10.0, &[5.0], 3, 10.0);
    let prices = PriceState { psi: vec![0.0, 0.4], lambda: vec![0.0], nu: 0.005 };
    assert_relative_eq!(solve_user(&p, &prices, 0).values[0].1, 0.3, epsilon = 1e-12);
}

#[test]
fn price_updates_by_direct_evaluation() {
    let p = common::single_user(10.0, &[5.0], 3, 1.0);
    let mut pr = PriceState { psi: vec![0.0, 0.02], lambda: vec![0.1], nu: 0.005 };
    assert_relative_eq!(update_ingress_price(&mut pr, 0, 2.0, 3.0), 0.1 - 0.005 * (2.0 - 3.0), epsilon = 1e-15);
    pr.lambda[0] = 0.001;
    assert_eq!(update_ingress_price(&mut pr, 0, 3.0, 0.0), 0.0_f64.max(0.001 - 0.015));
    assert_relative_eq!(update_egress_price(&mut pr, 1, -1.0 / 3.0), 0.02 + 0.005 / 3.0, epsilon = 1e-15);
    pr.psi[1] = 0.001;
    assert_eq!(update_egress_price(&mut pr, 1, 1.0), 0.0);
    let _ = p;
}

#[test]
fn slack_aperture_converges_only_in_kkt_mode() {
    // Two reachable helpers, L_A = 3: the ingress constraint never binds.
    let p = common::single_user(10.0, &[5.0, 2.0], 3, 10.0);
    let kkt = SolverConfig { max_iters: 200, ..SolverConfig::default() };
    let (a, report) = dual::run(&p, &kkt).unwrap();
    assert!(report.converged);
    assert!(a.iter().all(|(_, _, x)| x == 1.0));
    let paper = SolverConfig { convergence_mode: ConvergenceMode::Paper, ..kkt };
    assert!(!dual::run(&p, &paper).unwrap().1.converged);
}

#[test]
fn greedy_dominates_egress_feasible_allocations() {
    for seed in 0..10 {
        let p = synthetic_problem(&SyntheticParams { l_t_bar: 0.4, ..SyntheticParams::default() }, seed);
        let relaxed = centralized_relaxed(&p, 1e-8).unwrap();
        let greedy = objective(&p, &greedy_maas(&p));
        assert!(greedy >= relaxed.objective - 1e-9, "seed {seed}");
        assert!(greedy >= objective(&p, &randomized_egress(&p, seed, false)));
    }
}

#[test]
fn randomized_grants_follow_the_request_order() {
    // Helper cell 2 receives requests from users 0, 1 (β = ½, cell 0) and
    // user 2 (β = ⅓, cell 1). Users 3 and 4 fill cell 1 and reach no helper.
    let far = 1e-6;
    let users = [(0, 0.5, 1.0), (0, 0.5, 1.0), (1, 1.0 / 3.0, 1.0), (1, 1.0 / 3.0, 1.0), (1, 1.0 / 3.0, 1.0)];
    let sinr = [
        vec![10.0, far, 1.0],
        vec![10.0, far, 1.0],
        vec![far, 10.0, 1.0],
        vec![far, 10.0, far],
        vec![far, 10.0, far],
    ];
    let p = common::problem(3, &users, &sinr, 0.1, 1, 1.0);
    // Integer grants in order: a prefix of the order fits within L_T̄ = 1.
    let fits = |order: &[usize]| {
        let mut used = 0.0;
        let mut granted = Vec::new();
        for &k in order {
            let b = users[k].1;
            if used + b <= 1.0 {
                used += b;
                granted.push(k);
            } else {
                break;
            }
        }
        granted.sort();
        granted
    };
    let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let possible: Vec<Vec<usize>> = orders.iter().map(|o| fits(o)).collect();
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..64 {
        let a = randomized_egress(&p, seed, false);
        let mut granted: Vec<usize> = (0..3).filter(|&k| a.get(2, k) == Some(1.0)).collect();
        granted.sort();
        assert!(possible.contains(&granted), "{granted:?}");
        assert!((0..3).all(|k| matches!(a.get(2, k), Some(x) if x == 0.0 || x == 1.0)));
        seen.insert(granted);
    }
    assert!(seen.contains(&vec![0, 1]));
}

#[test]
fn relaxed_oracle_hits_a_one_dimensional_cap() {
    // β = 1, one helper, cap 0.3: the objective is increasing in x.
    let p = common::single_user(10.0, &[5.0], 3, 0.3);
    let sol = centralized_relaxed(&p, 1e-9).unwrap();
    assert_relative_eq!(sol.allocation.get(1, 0).unwrap(), 0.3, epsilon = 1e-7);
    assert_relative_eq!(sol.objective, (1.0f64 + 10.0 + 1.5).ln(), epsilon = 1e-9);
}

#[test]
fn brute_force_matches_hand_enumeration() {
    // Two users of cell 0 (β = ½) share helper 1, which can forward only one.
    let users = [(0, 0.5, 1.0), (0, 0.5, 2.0)];
    let sinr = [vec![4.0, 3.0], vec![6.0, 1.0]];
    let p = common::problem(2, &users, &sinr, 0.1, 1, 0.5);
    let u = |w: f64, s: f64, h: f64| w * 0.5 * (1.0 + s + h).ln();
    let options = [
        u(1.0, 4.0, 0.0) + u(2.0, 6.0, 0.0),
        u(1.0, 4.0, 3.0) + u(2.0, 6.0, 0.0),
        u(1.0, 4.0, 0.0) + u(2.0, 6.0, 1.0),
    ];
    let best = options.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (_, value) = brute_force_integer(&p).unwrap();
    assert_relative_eq!(value, best, epsilon = 1e-12);
}

#[test]
fn fig1_neighbourhoods_are_the_hand_built_sets() {
    let p = fig1_problem(3, 1.0);
    let expect: [&[usize]; 7] = [&[1, 3], &[1, 3], &[0, 2], &[1, 3], &[1, 3], &[1, 3], &[0, 2]];
    for (k, e) in expect.iter().enumerate() {
        assert_eq!(p.ingress_nbhd(k), *e, "user {k}");
    }
    assert_eq!(p.egress_nbhd(1, 2), vec![3, 4, 5]);
    assert!(p.egress_nbhd(1, 3).is_empty());
}

#[test]
fn converged_runs_match_the_relaxed_optimum() {
    let base = synthetic_problem(&SyntheticParams { l_a: 2, ..SyntheticParams::default() }, 1);
    for lt in [0.5, 0.8] {
        let p = base.with_limits(2, lt).unwrap();
        let opt = centralized_relaxed(&p, 1e-8).unwrap();
        for nu in [0.02, 0.005] {
            let cfg = SolverConfig {
                nu,
                schedule: StepSchedule::InverseSqrt,
                primal_recovery: PrimalRecovery::Averaged,
                eps2: 1e-3 * lt,
                max_iters: 1 << 16,
                ..SolverConfig::default()
            };
            let (a, report) = dual::run(&p, &cfg).unwrap();
            assert!(report.converged, "L_T = {lt}, ν = {nu}");
            assert!(residuals(&p, &a).max_egress_violation() <= cfg.eps2 + 1e-12);
            let rel = (objective(&p, &a) - opt.objective).abs() / opt.objective;
            assert!(rel <= 1e-4, "L_T = {lt}, ν = {nu}: {rel:e}");
        }
    }
}

#[test]
fn egress_sweep_gain_is_nondecreasing() {
    let base = synthetic_problem(&SyntheticParams::default(), 2);
    let mut last = f64::NEG_INFINITY;
    for lt in [0.25, 0.5, 1.0, 2.0] {
        let p = base.with_limits(2, lt).unwrap();
        let obj = centralized_relaxed(&p, 1e-8).unwrap().objective;
        assert!(obj >= last - 1e-7, "L_T = {lt}");
        last = obj;
    }
}
