//! The four-cell, seven-user toy network: neighbourhoods, the backhaul
//! overload of greedy sharing, and what the price iteration does about it.

use liquidmaas::baselines::greedy_maas;
use liquidmaas::dual;
use liquidmaas::problem::{egress_demand, objective};
use liquidmaas::scenario::presets::fig1_problem;
use liquidmaas::SolverConfig;

fn main() -> liquidmaas::Result<()> {
    let p = fig1_problem(3, 1.0);
    for k in 0..p.num_users() {
        println!("user {k}: served by {}, helpers {:?}", p.scenario().serving_cell(k), p.ingress_nbhd(k));
    }

    let greedy = greedy_maas(&p);
    println!("greedy egress demand {:?}", egress_demand(&p, &greedy));

    let (alloc, report) = dual::run(&p, &SolverConfig::default())?;
    let demand: Vec<String> = egress_demand(&p, &alloc).iter().map(|d| format!("{d:.3}")).collect();
    println!("liquidmaas egress demand [{}]", demand.join(", "));
    println!(
        "objective greedy {:.4} (infeasible) vs liquidmaas {:.4} after {} iterations",
        objective(&p, &greedy),
        objective(&p, &alloc),
        report.iterations
    );
    Ok(())
}
