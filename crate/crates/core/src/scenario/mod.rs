//! Network scenarios: geometry, users, SINRs and sharing neighbourhoods.

mod file;
mod layout;
mod neighborhood;
pub mod presets;
mod radio;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CellId, UserId};

pub use file::{read_scenario_file, write_scenario_file, ScenarioFile};
pub use layout::{drop_users, generate_hex_layout};
pub use neighborhood::{build_neighborhoods, SharingProblem};
pub use radio::{compute_sinr_matrix, InterferenceModel, PathlossModel, RadioParams, SectorPattern};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Bearing of `other` seen from `self`, degrees in (-180, 180].
    pub fn bearing_deg(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).to_degrees()
    }
}

/// One cell (sector) of a site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSite {
    pub id: CellId,
    /// Site the cell belongs to. Co-sited cells share position and shadowing.
    pub site: usize,
    pub position: Point,
    pub num_antennas: u32,
    /// Sector boresight; `None` for an omni cell.
    pub azimuth_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    pub position: Point,
    pub serving_cell: CellId,
    /// Fraction of the serving cell's bandwidth, in (0, 1].
    pub beta: f64,
    /// Scheduling weight, > 0.
    pub weight: f64,
}

/// Dense SINR table `S[i][k]`: linear SINR of user `k` at cell `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrMatrix {
    num_cells: usize,
    num_users: usize,
    // user-major: data[k * num_cells + i]
    data: Vec<f64>,
}

impl SinrMatrix {
    pub fn zeros(num_cells: usize, num_users: usize) -> Self {
        SinrMatrix { num_cells, num_users, data: vec![0.0; num_cells * num_users] }
    }

    /// Builds from per-user rows (one entry per cell).
    pub fn from_user_rows(num_cells: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = SinrMatrix::zeros(num_cells, rows.len());
        for (k, row) in rows.iter().enumerate() {
            if row.len() != num_cells {
                return Err(Error::InvalidScenario(format!(
                    "user {k} has {} SINR entries, expected {num_cells}",
                    row.len()
                )));
            }
            m.user_row_mut(k).copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    #[inline]
    pub fn get(&self, cell: CellId, user: UserId) -> f64 {
        self.data[user * self.num_cells + cell]
    }

    pub fn set(&mut self, cell: CellId, user: UserId, value: f64) {
        self.data[user * self.num_cells + cell] = value;
    }

    /// SINRs of one user at every cell.
    pub fn user_row(&self, user: UserId) -> &[f64] {
        &self.data[user * self.num_cells..(user + 1) * self.num_cells]
    }

    pub fn user_row_mut(&mut self, user: UserId) -> &mut [f64] {
        &mut self.data[user * self.num_cells..(user + 1) * self.num_cells]
    }
}

/// Cells, users and the full SINR table.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario {
    cells: Vec<CellSite>,
    users: Vec<User>,
    sinr: SinrMatrix,
    members: Vec<Vec<UserId>>,
}

impl NetworkScenario {
    /// Validates and assembles a scenario.
    ///
    /// Ids must be dense and in order, every user needs a finite positive
    /// serving SINR, and the bandwidth fractions of each cell sum to at most 1.
    pub fn new(cells: Vec<CellSite>, users: Vec<User>, sinr: SinrMatrix) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if cells.is_empty() {
            return bad("no cells".into());
        }
        for (idx, c) in cells.iter().enumerate() {
            if c.id != idx {
                return bad(format!("cell at position {idx} has id {}", c.id));
            }
            if c.num_antennas == 0 {
                return bad(format!("cell {idx} has no antennas"));
            }
        }
        if sinr.num_cells() != cells.len() || sinr.num_users() != users.len() {
            return bad(format!(
                "SINR matrix is {}x{}, expected {}x{}",
                sinr.num_cells(),
                sinr.num_users(),
                cells.len(),
                users.len()
            ));
        }
        let mut members = vec![Vec::new(); cells.len()];
        let mut load = vec![0.0; cells.len()];
        for (idx, u) in users.iter().enumerate() {
            if u.id != idx {
                return bad(format!("user at position {idx} has id {}", u.id));
            }
            if u.serving_cell >= cells.len() {
                return bad(format!("user {idx} served by unknown cell {}", u.serving_cell));
            }
            if !(u.beta > 0.0 && u.beta <= 1.0) {
                return bad(format!("user {idx} has bandwidth fraction {}", u.beta));
            }
            if !(u.weight > 0.0 && u.weight.is_finite()) {
                return bad(format!("user {idx} has weight {}", u.weight));
            }
            if let Some(&s) = sinr.user_row(idx).iter().find(|s| !(**s >= 0.0)) {
                return bad(format!("user {idx} has SINR entry {s}"));
            }
            let serving = sinr.get(u.serving_cell, idx);
            if !(serving > 0.0 && serving.is_finite()) {
                return bad(format!("user {idx} has serving SINR {serving}"));
            }
            members[u.serving_cell].push(idx);
            load[u.serving_cell] += u.beta;
        }
        if let Some((j, l)) = load.iter().enumerate().find(|(_, l)| **l > 1.0 + 1e-9) {
            return bad(format!("bandwidth fractions of cell {j} sum to {l}"));
        }
        Ok(NetworkScenario { cells, users, sinr, members })
    }

    pub fn cells(&self) -> &[CellSite] {
        &self.cells
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn sinr(&self) -> &SinrMatrix {
        &self.sinr
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// `u(j)`: users served by `cell`, ascending.
    pub fn users_of(&self, cell: CellId) -> &[UserId] {
        &self.members[cell]
    }

    pub fn serving_cell(&self, user: UserId) -> CellId {
        self.users[user].serving_cell
    }

    pub fn serving_sinr(&self, user: UserId) -> f64 {
        self.sinr.get(self.users[user].serving_cell, user)
    }

    /// Replaces the scheduling weights.
    pub fn with_weights(mut self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.users.len() {
            return Err(Error::param("weights", format!("expected {} entries", self.users.len())));
        }
        for (u, &w) in self.users.iter_mut().zip(weights) {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::param("weights", format!("weight {w} is not positive")));
            }
            u.weight = w;
        }
        Ok(self)
    }
}

/// Everything needed to synthesise a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub num_sites: usize,
    pub sectors_per_site: usize,
    pub isd_m: f64,
    pub num_antennas: u32,
    pub users_per_cell: usize,
    pub radio: RadioParams,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            num_sites: 19,
            sectors_per_site: 3,
            isd_m: 100.0,
            num_antennas: 2,
            users_per_cell: 10,
            radio: RadioParams::default(),
        }
    }
}

/// Layout, user drop and SINR computation in one call.
pub fn generate(params: &ScenarioParams, seed: u64) -> Result<NetworkScenario> {
    let mut cells = generate_hex_layout(params.num_sites, params.sectors_per_site, params.isd_m)?;
    for c in &mut cells {
        c.num_antennas = params.num_antennas;
    }
    let users = drop_users(&cells, params.isd_m, params.users_per_cell, &params.radio, seed)?;
    let sinr = compute_sinr_matrix(&cells, &users, &params.radio, seed)?;
    NetworkScenario::new(cells, users, sinr)
}
