//! One user's subproblem: helpers are taken in increasing metric order until
//! the marginal utility drops below the next metric.

use liquidmaas::primal::{ordered_helpers, solve_user};
use liquidmaas::scenario::{build_neighborhoods, CellSite, NetworkScenario, Point, SinrMatrix, User};
use liquidmaas::PriceState;

fn main() -> liquidmaas::Result<()> {
    let sinr = [4.0, 2.0, 1.0, 0.5, 0.25];
    let cells = (0..sinr.len())
        .map(|id| CellSite { id, site: id, position: Point::new(100.0 * id as f64, 0.0), num_antennas: 1, azimuth_deg: None })
        .collect();
    let users = vec![User { id: 0, position: Point::ORIGIN, serving_cell: 0, beta: 1.0, weight: 1.0 }];
    let scenario = NetworkScenario::new(cells, users, SinrMatrix::from_user_rows(sinr.len(), &[sinr.to_vec()])?)?;
    let p = build_neighborhoods(scenario, 0.1, 4, 1.0)?;

    for psi in [0.0, 0.05, 0.1, 0.2, 0.4] {
        let prices = PriceState { psi: vec![psi; p.num_cells()], lambda: vec![0.0], nu: 0.005 };
        let r = solve_user(&p, &prices, 0);
        let order: Vec<String> = ordered_helpers(&p, &prices, 0)
            .iter()
            .map(|&(i, m)| {
                let x = r.values.iter().find(|v| v.0 == i).map_or(0.0, |v| v.1);
                format!("cell {i} m={m:.3} x={x:.3}")
            })
            .collect();
        println!("ψ = {psi:.2}: {}", order.join("  "));
    }
    Ok(())
}
