use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CellSite, NetworkScenario, Point, SharingProblem, SinrMatrix, User};
use crate::error::{Error, Result};
use crate::units::{db_to_lin, lin_to_db};
use crate::{CellId, UserId};

/// On-disk scenario: cells, users with their SINR rows in dB, and the ingress
/// neighbourhoods. JSON, written pretty-printed so it can be edited by hand.
///
/// A zero linear SINR is written as `null`. When a user omits `ingress`, the
/// neighbourhood is derived from `s_min_db` on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub s_min_db: f64,
    pub cells: Vec<CellRecord>,
    pub users: Vec<UserRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: CellId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
    #[serde(default)]
    pub position: Point,
    #[serde(default = "one")]
    pub num_antennas: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth_deg: Option<f64>,
}

fn one() -> u32 {
    1
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub id: UserId,
    #[serde(default)]
    pub position: Point,
    pub serving_cell: CellId,
    pub beta: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    pub sinr_db: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingress: Option<Vec<CellId>>,
}

impl ScenarioFile {
    pub fn from_problem(problem: &SharingProblem) -> Self {
        let scenario = problem.scenario();
        let cells = scenario
            .cells()
            .iter()
            .map(|c| CellRecord {
                id: c.id,
                site: Some(c.site),
                position: c.position,
                num_antennas: c.num_antennas,
                azimuth_deg: c.azimuth_deg,
            })
            .collect();
        let users = scenario
            .users()
            .iter()
            .map(|u| UserRecord {
                id: u.id,
                position: u.position,
                serving_cell: u.serving_cell,
                beta: u.beta,
                weight: u.weight,
                sinr_db: scenario
                    .sinr()
                    .user_row(u.id)
                    .iter()
                    .map(|&s| (s > 0.0).then(|| lin_to_db(s)))
                    .collect(),
                ingress: Some(problem.ingress_nbhd(u.id).to_vec()),
            })
            .collect();
        ScenarioFile { s_min_db: lin_to_db(problem.s_min()), cells, users }
    }

    /// Validates the records and builds the problem with the given limits.
    pub fn into_problem(self, l_a: usize, l_t_bar: f64) -> Result<SharingProblem> {
        let num_cells = self.cells.len();
        let cells: Vec<CellSite> = self
            .cells
            .into_iter()
            .map(|c| CellSite {
                id: c.id,
                site: c.site.unwrap_or(c.id),
                position: c.position,
                num_antennas: c.num_antennas,
                azimuth_deg: c.azimuth_deg,
            })
            .collect();
        let mut users = Vec::with_capacity(self.users.len());
        let mut rows = Vec::with_capacity(self.users.len());
        let mut ingress = Vec::with_capacity(self.users.len());
        let mut explicit = true;
        for u in self.users {
            rows.push(u.sinr_db.iter().map(|db| db.map_or(0.0, db_to_lin)).collect::<Vec<_>>());
            match u.ingress {
                Some(nbhd) => ingress.push(nbhd),
                None => explicit = false,
            }
            users.push(User {
                id: u.id,
                position: u.position,
                serving_cell: u.serving_cell,
                beta: u.beta,
                weight: u.weight,
            });
        }
        let sinr = SinrMatrix::from_user_rows(num_cells, &rows)?;
        let scenario = NetworkScenario::new(cells, users, sinr)?;
        let s_min = db_to_lin(self.s_min_db);
        if explicit {
            SharingProblem::new(scenario, ingress, l_a, l_t_bar, s_min)
        } else if ingress.is_empty() {
            super::build_neighborhoods(scenario, s_min, l_a, l_t_bar)
        } else {
            Err(Error::InvalidScenario("either every user or no user may list `ingress`".into()))
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario records serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn write_scenario_file(path: &Path, problem: &SharingProblem) -> Result<()> {
    fs::write(path, ScenarioFile::from_problem(problem).to_json()).map_err(|e| Error::io(path, e))
}

/// Reads a scenario file and attaches the limits `l_a` and `l_t_bar`.
pub fn read_scenario_file(path: &Path, l_a: usize, l_t_bar: f64) -> Result<SharingProblem> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = ScenarioFile::from_json(&text).map_err(|e| Error::Parse { path: path.into(), reason: e.to_string() })?;
    file.into_problem(l_a, l_t_bar)
}
