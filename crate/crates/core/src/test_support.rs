use crate::scenario::{build_neighborhoods, CellSite, NetworkScenario, Point, SharingProblem, SinrMatrix, User};

/// One user (β = ω = 1) served by cell 0, one extra cell per helper SINR.
pub(crate) fn single_user(serving: f64, helpers: &[f64], l_a: usize, l_t_bar: f64) -> SharingProblem {
    single_user_weighted(serving, helpers, 1.0, 1.0, l_a, l_t_bar)
}

pub(crate) fn single_user_weighted(
    serving: f64,
    helpers: &[f64],
    beta: f64,
    weight: f64,
    l_a: usize,
    l_t_bar: f64,
) -> SharingProblem {
    let n = helpers.len() + 1;
    let cells = (0..n)
        .map(|id| CellSite { id, site: id, position: Point::ORIGIN, num_antennas: 1, azimuth_deg: None })
        .collect();
    let users = vec![User { id: 0, position: Point::ORIGIN, serving_cell: 0, beta, weight }];
    let mut row = vec![serving];
    row.extend_from_slice(helpers);
    let sinr = SinrMatrix::from_user_rows(n, &[row]).unwrap();
    let s = NetworkScenario::new(cells, users, sinr).unwrap();
    build_neighborhoods(s, 1e-3, l_a, l_t_bar).unwrap()
}
