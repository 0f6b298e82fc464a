//! Gain over No CoMP as the backhaul budget grows. Greedy sharing ignores the
//! budget, so its gain is flat; LiquidMAAS approaches it from below.

use liquidmaas::experiment::{compare_problem, Algorithm, ExperimentConfig};

fn main() -> liquidmaas::Result<()> {
    let cfg = ExperimentConfig { algorithms: vec![Algorithm::Liquidmaas, Algorithm::GreedyMaas], ..Default::default() };
    let base = cfg.load_problem(1.0)?;
    println!("{:>6} {:>10} {:>10}", "L_T", "liquidmaas", "greedy");
    for lt in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let table = compare_problem(&base.with_limits(cfg.l_a, lt)?, &ExperimentConfig { l_t_bar: vec![lt], ..cfg.clone() })?;
        let gain = |a| table.rows.iter().find(|r| r.algorithm == a).map_or(f64::NAN, |r| r.gain);
        println!("{lt:>6} {:>10.4} {:>10.4}", gain(Algorithm::Liquidmaas), gain(Algorithm::GreedyMaas));
    }
    Ok(())
}
