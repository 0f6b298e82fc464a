use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::radio::{coupling_loss_db, RadioParams};
use super::{CellSite, Point, User};
use crate::error::{Error, Result};

// Axial hex directions, walked in order when tracing a ring.
const HEX_DIRS: [(i64, i64); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

/// Axial coordinates of the first `count` hexes in spiral order (centre, ring 1, ring 2, ...).
fn hex_spiral(count: usize) -> Vec<(i64, i64)> {
    let mut out = vec![(0, 0)];
    let mut ring = 1i64;
    while out.len() < count {
        // Start at the hex `ring` steps in direction 4, then walk the six sides.
        let (mut q, mut r) = (HEX_DIRS[4].0 * ring, HEX_DIRS[4].1 * ring);
        for dir in HEX_DIRS {
            for _ in 0..ring {
                out.push((q, r));
                q += dir.0;
                r += dir.1;
            }
        }
        ring += 1;
    }
    out.truncate(count);
    out
}

/// Hexagonal grid of `num_sites` sites with `sectors_per_site` cells each.
///
/// Site 0 sits at the origin, the next six on the first ring at distance `isd`,
/// and so on. Sector `s` of a multi-sector site points at `30° + s·360°/S`.
/// Cells get one antenna; callers override `num_antennas` as needed.
pub fn generate_hex_layout(num_sites: usize, sectors_per_site: usize, isd: f64) -> Result<Vec<CellSite>> {
    if num_sites == 0 {
        return Err(Error::param("num_sites", "must be at least 1"));
    }
    if sectors_per_site == 0 {
        return Err(Error::param("sectors_per_site", "must be at least 1"));
    }
    if !(isd > 0.0 && isd.is_finite()) {
        return Err(Error::param("isd", format!("{isd} is not a positive distance")));
    }
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    let mut cells = Vec::with_capacity(num_sites * sectors_per_site);
    for (site, (q, r)) in hex_spiral(num_sites).into_iter().enumerate() {
        let position = Point::new(isd * (q as f64 + r as f64 / 2.0), isd * half_sqrt3 * r as f64);
        for s in 0..sectors_per_site {
            let azimuth_deg = (sectors_per_site > 1)
                .then(|| 30.0 + 360.0 * s as f64 / sectors_per_site as f64);
            cells.push(CellSite { id: cells.len(), site, position, num_antennas: 1, azimuth_deg });
        }
    }
    Ok(cells)
}

/// Whether `p` (relative to the site) lies in the site's hexagon of inradius `isd/2`.
fn in_site_hexagon(dx: f64, dy: f64, isd: f64) -> bool {
    (0..6).all(|n| {
        let a = (60.0 * n as f64).to_radians();
        dx * a.cos() + dy * a.sin() <= isd / 2.0
    })
}

fn angle_diff_deg(a: f64, b: f64) -> f64 {
    (a - b + 540.0).rem_euclid(360.0) - 180.0
}

fn sample_in_cell<R: Rng>(cell: &CellSite, sectors: usize, isd: f64, rng: &mut R) -> Point {
    let circumradius = isd / 3f64.sqrt();
    loop {
        let dx = rng.random_range(-circumradius..circumradius);
        let dy = rng.random_range(-circumradius..circumradius);
        if !in_site_hexagon(dx, dy, isd) {
            continue;
        }
        if let Some(az) = cell.azimuth_deg {
            let bearing = dy.atan2(dx).to_degrees();
            if angle_diff_deg(bearing, az).abs() > 180.0 / sectors as f64 {
                continue;
            }
        }
        return Point::new(cell.position.x + dx, cell.position.y + dy);
    }
}

/// Drops `users_per_cell` users uniformly in each cell's area and attaches
/// each to the cell with the smallest coupling loss.
///
/// A cell's area is its site's hexagon (inradius `isd/2`), restricted to the
/// sector wedge for sectorised sites. Bandwidth is split equally among the
/// users of each serving cell and all weights are 1. Shadowing, if enabled in
/// `radio`, is the same realisation [`compute_sinr_matrix`](super::compute_sinr_matrix)
/// uses for the same `seed`.
pub fn drop_users(
    cells: &[CellSite],
    isd: f64,
    users_per_cell: usize,
    radio: &RadioParams,
    seed: u64,
) -> Result<Vec<User>> {
    if users_per_cell == 0 {
        return Err(Error::param("users_per_cell", "must be at least 1"));
    }
    let mut sectors = vec![0usize; cells.iter().map(|c| c.site + 1).max().unwrap_or(0)];
    for c in cells {
        sectors[c.site] += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut users = Vec::with_capacity(cells.len() * users_per_cell);
    for cell in cells {
        for _ in 0..users_per_cell {
            let position = sample_in_cell(cell, sectors[cell.site], isd, &mut rng);
            users.push(User { id: users.len(), position, serving_cell: 0, beta: 1.0, weight: 1.0 });
        }
    }
    let shadowing = radio.shadowing(cells, users.len(), seed);
    for user in &mut users {
        let losses = cells
            .iter()
            .map(|c| coupling_loss_db(c, &user.position, radio) + shadowing.get(user.id, c.site));
        user.serving_cell = losses
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .expect("at least one cell");
    }
    let mut counts = vec![0usize; cells.len()];
    for u in &users {
        counts[u.serving_cell] += 1;
    }
    for u in &mut users {
        u.beta = 1.0 / counts[u.serving_cell] as f64;
    }
    Ok(users)
}
