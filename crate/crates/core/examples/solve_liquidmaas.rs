//! Runs the price iteration on the default network and prints how the
//! objective and the worst backhaul overload evolve.

use liquidmaas::dual;
use liquidmaas::experiment::ExperimentConfig;
use liquidmaas::problem::{objective, residuals};

fn main() -> liquidmaas::Result<()> {
    let cfg = ExperimentConfig::default();
    let p = cfg.load_problem(1.0)?;
    let solver = cfg.solver_for(1.0);
    let (alloc, report) = dual::run(&p, &solver)?;

    let mut t = 1;
    while t <= report.iterations {
        println!(
            "t {t:>6}  objective {:.4}  egress violation {:.2e}",
            report.objective_trace[t - 1],
            report.egress_violation_trace[t - 1]
        );
        t *= 4;
    }
    let r = residuals(&p, &alloc);
    println!(
        "{} after {} iterations: objective {:.4}, egress violation {:.2e}",
        if report.converged { "converged" } else { "stopped" },
        report.iterations,
        objective(&p, &alloc),
        r.max_egress_violation()
    );
    Ok(())
}
