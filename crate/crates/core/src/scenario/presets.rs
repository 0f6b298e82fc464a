//! Hand-built and synthetic instances for tests, examples and validation runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_neighborhoods, CellSite, NetworkScenario, Point, SharingProblem, SinrMatrix, User};
use crate::units::db_to_lin;

/// Default SINR admission threshold, -10 dB.
pub const DEFAULT_S_MIN_DB: f64 = -10.0;

/// Four cells on a square, seven users, cells 1–3 and 2–4 (1-based) not
/// connected. Cells are numbered 0..4 and users 0..7.
///
/// SINRs are synthetic: every pair that shares a backhaul link is above
/// -10 dB, every diagonal pair is far below it.
pub fn fig1_scenario() -> NetworkScenario {
    let cells = [(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0)]
        .iter()
        .enumerate()
        .map(|(id, &(x, y))| CellSite { id, site: id, position: Point::new(x, y), num_antennas: 2, azimuth_deg: None })
        .collect();
    // (serving cell, beta, SINR in dB at cells 0..4)
    let third = 1.0 / 3.0;
    let rows: [(usize, f64, [f64; 4]); 7] = [
        (0, 0.5, [12.0, 2.0, -20.0, -1.0]),
        (0, 0.5, [8.0, 3.0, -25.0, -4.0]),
        (1, 1.0, [1.0, 10.0, -2.0, -22.0]),
        (2, third, [-30.0, 4.0, 6.0, 0.0]),
        (2, third, [-18.0, -6.0, 15.0, -3.0]),
        (2, third, [-19.0, 0.5, 9.0, 2.5]),
        (3, 1.0, [-5.0, -24.0, 1.5, 11.0]),
    ];
    let users = rows
        .iter()
        .enumerate()
        .map(|(id, &(serving, beta, _))| User {
            id,
            position: Point::ORIGIN,
            serving_cell: serving,
            beta,
            weight: 1.0,
        })
        .collect();
    let lin: Vec<Vec<f64>> = rows.iter().map(|r| r.2.iter().map(|&db| db_to_lin(db)).collect()).collect();
    let sinr = SinrMatrix::from_user_rows(4, &lin).expect("four cells per row");
    NetworkScenario::new(cells, users, sinr).expect("valid fixture")
}

/// [`fig1_scenario`] with neighbourhoods at the default -10 dB threshold.
pub fn fig1_problem(l_a: usize, l_t_bar: f64) -> SharingProblem {
    build_neighborhoods(fig1_scenario(), db_to_lin(DEFAULT_S_MIN_DB), l_a, l_t_bar).expect("valid fixture")
}

/// Knobs for [`synthetic_problem`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub num_cells: usize,
    pub users_per_cell: usize,
    /// Serving SINR drawn uniformly in this dB range.
    pub serving_db: (f64, f64),
    /// Cross-cell SINR drawn uniformly in this dB range.
    pub cross_db: (f64, f64),
    /// Probability that a given cross-cell SINR is drawn at all; otherwise
    /// the pair is unreachable (-40 dB).
    pub reach_prob: f64,
    /// Scheduling weights drawn uniformly in this range.
    pub weight_range: (f64, f64),
    pub s_min_db: f64,
    pub l_a: usize,
    pub l_t_bar: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            num_cells: 10,
            users_per_cell: 3,
            serving_db: (0.0, 20.0),
            cross_db: (-15.0, 5.0),
            reach_prob: 0.5,
            weight_range: (0.5, 2.0),
            s_min_db: DEFAULT_S_MIN_DB,
            l_a: 2,
            l_t_bar: 1.0,
        }
    }
}

/// Random instance with SINRs drawn directly, bypassing the radio model.
///
/// Every cell serves exactly `users_per_cell` users with equal bandwidth
/// shares; users are numbered cell by cell.
pub fn synthetic_problem(params: &SyntheticParams, seed: u64) -> SharingProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = params.num_cells;
    let beta = 1.0 / params.users_per_cell as f64;
    let cells = (0..j)
        .map(|id| CellSite { id, site: id, position: Point::new(100.0 * id as f64, 0.0), num_antennas: 2, azimuth_deg: None })
        .collect();
    let mut users = Vec::new();
    let mut rows = Vec::new();
    for cell in 0..j {
        for _ in 0..params.users_per_cell {
            let id = users.len();
            let weight = rng.random_range(params.weight_range.0..=params.weight_range.1);
            users.push(User { id, position: Point::ORIGIN, serving_cell: cell, beta, weight });
            let row = (0..j)
                .map(|i| {
                    let db = if i == cell {
                        rng.random_range(params.serving_db.0..params.serving_db.1)
                    } else if rng.random_bool(params.reach_prob) {
                        rng.random_range(params.cross_db.0..params.cross_db.1)
                    } else {
                        -40.0
                    };
                    db_to_lin(db)
                })
                .collect();
            rows.push(row);
        }
    }
    let sinr = SinrMatrix::from_user_rows(j, &rows).expect("rectangular rows");
    let scenario = NetworkScenario::new(cells, users, sinr).expect("valid synthetic scenario");
    build_neighborhoods(scenario, db_to_lin(params.s_min_db), params.l_a, params.l_t_bar).expect("valid limits")
}
