#![allow(dead_code)]

use liquidmaas::scenario::{build_neighborhoods, CellSite, NetworkScenario, Point, SharingProblem, SinrMatrix, User};

/// `users[k] = (serving cell, β, ω)`, `sinr[k][i]` linear.
pub fn problem(
    num_cells: usize,
    users: &[(usize, f64, f64)],
    sinr: &[Vec<f64>],
    s_min: f64,
    l_a: usize,
    l_t_bar: f64,
) -> SharingProblem {
    let cells = (0..num_cells)
        .map(|id| CellSite { id, site: id, position: Point::new(100.0 * id as f64, 0.0), num_antennas: 1, azimuth_deg: None })
        .collect();
    let users = users
        .iter()
        .enumerate()
        .map(|(id, &(serving_cell, beta, weight))| User { id, position: Point::ORIGIN, serving_cell, beta, weight })
        .collect();
    let sinr = SinrMatrix::from_user_rows(num_cells, sinr).unwrap();
    build_neighborhoods(NetworkScenario::new(cells, users, sinr).unwrap(), s_min, l_a, l_t_bar).unwrap()
}

/// One user served by cell 0 with β = ω = 1 and one extra cell per helper.
pub fn single_user(serving: f64, helpers: &[f64], l_a: usize, l_t_bar: f64) -> SharingProblem {
    let mut row = vec![serving];
    row.extend_from_slice(helpers);
    problem(helpers.len() + 1, &[(0, 1.0, 1.0)], &[row], 1e-3, l_a, l_t_bar)
}

/// Largest value of `f` on the grid `0, step, …, 1` and where it occurs.
pub fn grid_argmax(step: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|m| m as f64 * step).map(|x| (x, f(x))).fold((0.0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
}
