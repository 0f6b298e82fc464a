//! Checks the price iteration against the centralized relaxed solver and the
//! exhaustive integer search on a small random network.

use liquidmaas::dual;
use liquidmaas::oracles::{brute_force_integer, centralized_relaxed};
use liquidmaas::problem::objective;
use liquidmaas::scenario::presets::{synthetic_problem, SyntheticParams};
use liquidmaas::SolverConfig;

fn main() -> liquidmaas::Result<()> {
    let params = SyntheticParams { num_cells: 4, users_per_cell: 2, l_a: 1, ..SyntheticParams::default() };
    for lt in [0.25, 0.5, 1.0] {
        let p = synthetic_problem(&SyntheticParams { l_t_bar: lt, ..params.clone() }, 3);
        let solver = SolverConfig { nu: 0.05, eps2: 1e-3 * lt, ..SolverConfig::default() };
        let (alloc, report) = dual::run(&p, &solver)?;
        let relaxed = centralized_relaxed(&p, 1e-9)?;
        let (_, integer) = brute_force_integer(&p)?;
        println!(
            "L_T {lt:<5} liquidmaas {:.6} ({} its)  relaxed {:.6} (gap {:.1e})  integer {:.6}",
            objective(&p, &alloc),
            report.iterations,
            relaxed.objective,
            relaxed.duality_gap,
            integer
        );
    }
    Ok(())
}
