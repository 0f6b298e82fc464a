//! WSR gain of every algorithm over No CoMP on one network.

use liquidmaas::experiment::{compare_problem, ExperimentConfig};

fn main() -> liquidmaas::Result<()> {
    let cfg = ExperimentConfig::default();
    let p = cfg.load_problem(1.0)?;
    print!("{}", compare_problem(&p, &cfg)?);
    Ok(())
}
