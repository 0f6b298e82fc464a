//! Drops users on the 19-site, 57-cell layout and writes the scenario file.

use liquidmaas::scenario::{build_neighborhoods, generate, write_scenario_file, ScenarioParams};
use liquidmaas::units::{db_to_lin, lin_to_db};

fn main() -> liquidmaas::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let scenario = generate(&ScenarioParams::default(), seed)?;
    let p = build_neighborhoods(scenario, db_to_lin(-10.0), 3, 1.0)?;

    let mut serving: Vec<f64> = (0..p.num_users()).map(|k| lin_to_db(p.scenario().serving_sinr(k))).collect();
    serving.sort_by(f64::total_cmp);
    println!("{} cells, {} users, seed {seed}", p.num_cells(), p.num_users());
    println!(
        "serving SINR dB: p5 {:.1}  median {:.1}  p95 {:.1}",
        serving[serving.len() / 20],
        serving[serving.len() / 2],
        serving[serving.len() * 19 / 20]
    );
    let sizes: Vec<usize> = (0..p.num_users()).map(|k| p.l_r(k)).collect();
    println!(
        "helpers per user: mean {:.2}, max {}",
        p.num_sharing_vars() as f64 / p.num_users() as f64,
        sizes.iter().max().unwrap_or(&0)
    );

    let path = std::env::temp_dir().join(format!("liquidmaas_scenario_{seed}.json"));
    write_scenario_file(&path, &p)?;
    println!("wrote {}", path.display());
    Ok(())
}
