use super::NetworkScenario;
use crate::error::{Error, Result};
use crate::{CellId, UserId};

/// A NUM instance: a scenario plus neighbourhoods and the two limits.
///
/// `N_R(k)` (ingress) lists the cells that may help user `k`. Its dual view
/// `N_T(i, j)` (egress) lists the users of cell `j` that cell `i` may help.
/// Both are kept consistent by construction: only `N_R` is stored and the
/// egress side is derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SharingProblem {
    scenario: NetworkScenario,
    ingress: Vec<Vec<CellId>>,
    helped: Vec<Vec<UserId>>,
    l_a: usize,
    l_t_bar: f64,
    s_min: f64,
}

impl SharingProblem {
    /// Assembles a problem from explicit ingress neighbourhoods.
    ///
    /// Each `ingress[k]` must exclude the serving cell, contain no duplicates,
    /// and only list cells where the user's SINR is at least `s_min`.
    pub fn new(
        scenario: NetworkScenario,
        mut ingress: Vec<Vec<CellId>>,
        l_a: usize,
        l_t_bar: f64,
        s_min: f64,
    ) -> Result<Self> {
        if !(l_t_bar >= 0.0) {
            return Err(Error::param("l_t_bar", format!("{l_t_bar} is negative")));
        }
        if !(s_min > 0.0) {
            return Err(Error::param("s_min", format!("{s_min} must be a positive linear ratio")));
        }
        if ingress.len() != scenario.num_users() {
            return Err(Error::InvalidScenario(format!(
                "{} ingress lists for {} users",
                ingress.len(),
                scenario.num_users()
            )));
        }
        let mut helped = vec![Vec::new(); scenario.num_cells()];
        for (k, nbhd) in ingress.iter_mut().enumerate() {
            nbhd.sort_unstable();
            let serving = scenario.serving_cell(k);
            for (pos, &i) in nbhd.iter().enumerate() {
                if i >= scenario.num_cells() {
                    return Err(Error::InvalidScenario(format!("user {k} lists unknown helper {i}")));
                }
                if i == serving {
                    return Err(Error::InvalidScenario(format!("user {k} lists its serving cell {i} as helper")));
                }
                if pos > 0 && nbhd[pos - 1] == i {
                    return Err(Error::InvalidScenario(format!("user {k} lists helper {i} twice")));
                }
                let s = scenario.sinr().get(i, k);
                if !(s >= s_min) {
                    return Err(Error::InvalidScenario(format!(
                        "helper {i} of user {k} has SINR {s} below the threshold {s_min}"
                    )));
                }
                helped[i].push(k);
            }
        }
        Ok(SharingProblem { scenario, ingress, helped, l_a, l_t_bar, s_min })
    }

    pub fn scenario(&self) -> &NetworkScenario {
        &self.scenario
    }

    pub fn num_cells(&self) -> usize {
        self.scenario.num_cells()
    }

    pub fn num_users(&self) -> usize {
        self.scenario.num_users()
    }

    /// `N_R(k)`, ascending cell ids.
    pub fn ingress_nbhd(&self, user: UserId) -> &[CellId] {
        &self.ingress[user]
    }

    /// `N_T(i, j)`: users served by `cell` that `helper` may help.
    pub fn egress_nbhd(&self, helper: CellId, cell: CellId) -> Vec<UserId> {
        self.helped[helper]
            .iter()
            .copied()
            .filter(|&k| self.scenario.serving_cell(k) == cell)
            .collect()
    }

    /// Union of `N_T(i, j)` over all `j`, ascending user ids.
    pub fn helped_by(&self, helper: CellId) -> &[UserId] {
        &self.helped[helper]
    }

    pub fn l_a(&self) -> usize {
        self.l_a
    }

    /// `L_R(k) = |N_R(k)|`.
    pub fn l_r(&self, user: UserId) -> usize {
        self.ingress[user].len()
    }

    /// Effective aperture cap `min(L_A, L_R(k))`.
    pub fn l_eff(&self, user: UserId) -> usize {
        self.l_a.min(self.l_r(user))
    }

    pub fn l_t_bar(&self) -> f64 {
        self.l_t_bar
    }

    /// SINR admission threshold, linear.
    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    /// Total number of sharing variables `Σ_k |N_R(k)|`.
    pub fn num_sharing_vars(&self) -> usize {
        self.ingress.iter().map(Vec::len).sum()
    }

    /// Same instance with different limits.
    pub fn with_limits(&self, l_a: usize, l_t_bar: f64) -> Result<Self> {
        if !(l_t_bar >= 0.0) {
            return Err(Error::param("l_t_bar", format!("{l_t_bar} is negative")));
        }
        Ok(SharingProblem { l_a, l_t_bar, ..self.clone() })
    }

    pub fn beta(&self, user: UserId) -> f64 {
        self.scenario.users()[user].beta
    }

    pub fn weight(&self, user: UserId) -> f64 {
        self.scenario.users()[user].weight
    }

    /// `S_{i→σ(k)}^k`.
    pub fn sinr(&self, cell: CellId, user: UserId) -> f64 {
        self.scenario.sinr().get(cell, user)
    }
}

/// Derives `N_R(k) = {i ≠ σ(k) : S_{i→σ(k)}^k ≥ s_min}` for every user.
pub fn build_neighborhoods(scenario: NetworkScenario, s_min: f64, l_a: usize, l_t_bar: f64) -> Result<SharingProblem> {
    if !(s_min > 0.0) {
        return Err(Error::param("s_min", format!("{s_min} must be a positive linear ratio")));
    }
    let ingress = (0..scenario.num_users())
        .map(|k| {
            let serving = scenario.serving_cell(k);
            scenario
                .sinr()
                .user_row(k)
                .iter()
                .enumerate()
                .filter(|&(i, &s)| i != serving && s >= s_min)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    SharingProblem::new(scenario, ingress, l_a, l_t_bar, s_min)
}
