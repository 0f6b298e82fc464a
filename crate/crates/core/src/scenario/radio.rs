use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{CellSite, Point, SinrMatrix, User};
use crate::error::{Error, Result};
use crate::units::{db_to_lin, dbm_to_mw, lin_to_db};

const SHADOWING_SALT: u64 = 0x5348_4144_4f57_0001;
const INTERFERER_SALT: u64 = 0x494e_5446_4552_0002;

/// Log-distance pathloss `PL(d) = intercept + 10·n·log10(d / d0)`, with `d`
/// clamped to at least `d0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossModel {
    pub intercept_db: f64,
    pub reference_m: f64,
    pub exponent: f64,
}

impl Default for PathlossModel {
    fn default() -> Self {
        PathlossModel { intercept_db: 38.5, reference_m: 1.0, exponent: 3.76 }
    }
}

impl PathlossModel {
    pub fn loss_db(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(self.reference_m);
        self.intercept_db + 10.0 * self.exponent * (d / self.reference_m).log10()
    }

    /// Free-space loss at 1 m for `carrier_hz`; about 38.5 dB at 2 GHz.
    pub fn free_space_intercept_db(carrier_hz: f64) -> f64 {
        let wavelength = 299_792_458.0 / carrier_hz;
        20.0 * (4.0 * std::f64::consts::PI / wavelength).log10()
    }
}

/// Horizontal sector pattern `G(θ) = G_max − min(12 (θ/θ3dB)², A_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorPattern {
    pub beamwidth_deg: f64,
    pub max_attenuation_db: f64,
    pub boresight_gain_dbi: f64,
}

impl Default for SectorPattern {
    fn default() -> Self {
        SectorPattern { beamwidth_deg: 70.0, max_attenuation_db: 20.0, boresight_gain_dbi: 0.0 }
    }
}

impl SectorPattern {
    pub fn gain_db(&self, off_boresight_deg: f64) -> f64 {
        let ratio = off_boresight_deg / self.beamwidth_deg;
        self.boresight_gain_dbi - (12.0 * ratio * ratio).min(self.max_attenuation_db)
    }
}

/// How inter-cell interference is formed for a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceModel {
    /// One uniformly drawn co-scheduled user per other cell (full buffer).
    #[default]
    Sampled,
    /// Average over all users of each other cell.
    Expected,
    /// Thermal noise only.
    NoiseOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioParams {
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    /// Fractional power control pathloss compensation, in [0, 1].
    pub alpha: f64,
    pub p0_dbm: f64,
    pub p_max_dbm: f64,
    pub noise_figure_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub pathloss: PathlossModel,
    /// Log-normal shadowing standard deviation; `None` disables shadowing.
    pub shadowing_sigma_db: Option<f64>,
    pub sector: SectorPattern,
    pub interference: InterferenceModel,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            bandwidth_hz: 10e6,
            carrier_hz: 2.0e9,
            alpha: 0.8,
            p0_dbm: -80.0,
            p_max_dbm: 24.0,
            noise_figure_db: 4.0,
            noise_psd_dbm_hz: -174.0,
            pathloss: PathlossModel::default(),
            shadowing_sigma_db: None,
            sector: SectorPattern::default(),
            interference: InterferenceModel::Sampled,
        }
    }
}

/// Per (user, site) shadowing realisation in dB.
pub(crate) struct Shadowing {
    num_sites: usize,
    values: Vec<f64>,
}

impl Shadowing {
    pub(crate) fn get(&self, user: usize, site: usize) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values[user * self.num_sites + site]
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", format!("{} is outside [0, 1]", self.alpha)));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::param("bandwidth_hz", "must be positive"));
        }
        if !(self.pathloss.reference_m > 0.0) {
            return Err(Error::param("pathloss.reference_m", "must be positive"));
        }
        if let Some(s) = self.shadowing_sigma_db {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::param("shadowing_sigma_db", format!("{s} is not a valid deviation")));
            }
        }
        Ok(())
    }

    /// Open-loop fractional power control, dBm.
    pub fn transmit_power_dbm(&self, serving_loss_db: f64) -> f64 {
        self.p_max_dbm.min(self.p0_dbm + self.alpha * serving_loss_db)
    }

    /// Thermal noise over `beta` of the system bandwidth including the noise figure, mW.
    pub fn noise_mw(&self, beta: f64) -> f64 {
        dbm_to_mw(self.noise_psd_dbm_hz + lin_to_db(beta * self.bandwidth_hz) + self.noise_figure_db)
    }

    pub(crate) fn shadowing(&self, cells: &[CellSite], num_users: usize, seed: u64) -> Shadowing {
        let num_sites = cells.iter().map(|c| c.site + 1).max().unwrap_or(0);
        let Some(sigma) = self.shadowing_sigma_db.filter(|s| *s > 0.0) else {
            return Shadowing { num_sites, values: Vec::new() };
        };
        let normal = Normal::new(0.0, sigma).expect("validated deviation");
        let mut values = Vec::with_capacity(num_users * num_sites);
        for user in 0..num_users {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SHADOWING_SALT);
            rng.set_stream(user as u64);
            values.extend((0..num_sites).map(|_| normal.sample(&mut rng)));
        }
        Shadowing { num_sites, values }
    }
}

/// Pathloss minus antenna gain between a cell and a point, without shadowing.
pub(crate) fn coupling_loss_db(cell: &CellSite, at: &Point, radio: &RadioParams) -> f64 {
    let loss = radio.pathloss.loss_db(cell.position.distance(at));
    match cell.azimuth_deg {
        Some(az) => {
            let off = (cell.position.bearing_deg(at) - az + 540.0).rem_euclid(360.0) - 180.0;
            loss - radio.sector.gain_db(off)
        }
        None => loss,
    }
}

/// Linear SINR of every user at every cell.
///
/// Transmit power follows `min(P_max, P0 + α·CL_serving)` dBm. The desired
/// signal and the noise are taken over the user's share `β_k` of the band, and
/// interference is the received power spectral density of the co-scheduled
/// users of the other cells over the same share. The result is multiplied by
/// the receiving cell's antenna count (MRC over co-located antennas).
pub fn compute_sinr_matrix(cells: &[CellSite], users: &[User], radio: &RadioParams, seed: u64) -> Result<SinrMatrix> {
    radio.validate()?;
    let num_cells = cells.len();
    let shadowing = radio.shadowing(cells, users.len(), seed);
    // Linear coupling gain, user-major.
    let mut gain = vec![0.0; users.len() * num_cells];
    for u in users {
        for c in cells {
            let cl = coupling_loss_db(c, &u.position, radio) + shadowing.get(u.id, c.site);
            gain[u.id * num_cells + c.id] = db_to_lin(-cl);
        }
    }
    let tx_mw: Vec<f64> = users
        .iter()
        .map(|u| {
            let serving_loss = -lin_to_db(gain[u.id * num_cells + u.serving_cell]);
            dbm_to_mw(radio.transmit_power_dbm(serving_loss))
        })
        .collect();

    let mut members = vec![Vec::new(); num_cells];
    for u in users {
        members[u.serving_cell].push(u.id);
    }

    let mut sinr = SinrMatrix::zeros(num_cells, users.len());
    let mut interference_psd = vec![0.0; num_cells];
    for u in users {
        interference_psd.iter_mut().for_each(|v| *v = 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ INTERFERER_SALT);
        rng.set_stream(u.id as u64);
        for (l, others) in members.iter().enumerate() {
            if l == u.serving_cell || others.is_empty() {
                continue;
            }
            let psd_at = |m: usize, i: usize| tx_mw[m] * gain[m * num_cells + i] / users[m].beta;
            match radio.interference {
                InterferenceModel::NoiseOnly => {}
                InterferenceModel::Sampled => {
                    let m = others[rng.random_range(0..others.len())];
                    for (i, v) in interference_psd.iter_mut().enumerate() {
                        *v += psd_at(m, i);
                    }
                }
                InterferenceModel::Expected => {
                    let n = others.len() as f64;
                    for (i, v) in interference_psd.iter_mut().enumerate() {
                        *v += others.iter().map(|&m| psd_at(m, i)).sum::<f64>() / n;
                    }
                }
            }
        }
        let noise = radio.noise_mw(u.beta);
        for c in cells {
            let signal = tx_mw[u.id] * gain[u.id * num_cells + c.id];
            let denom = noise + u.beta * interference_psd[c.id];
            sinr.set(c.id, u.id, c.num_antennas as f64 * signal / denom);
        }
    }
    Ok(sinr)
}
