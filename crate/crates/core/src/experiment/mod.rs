//! Experiment drivers behind the `liquidmaas` binary.
//!
//! An [`ExperimentConfig`] is one TOML file holding the scenario source, the
//! radio parameters, the limits and the solver settings; command-line flags
//! override individual fields. Each `cmd_*` function writes its artifacts to
//! the configured output directory and returns a summary.

mod commands;
pub mod svg;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

pub use commands::{
    cmd_compare, cmd_generate, cmd_solve, cmd_sweep, cmd_validate, compare_problem, run_algorithm, AlgorithmRun, CompareRow,
    CompareTable, GenerateSummary, SolveSummary, ValidateRow,
};

use crate::dual::SolverConfig;
use crate::error::{Error, Result};
use crate::scenario::presets::{fig1_scenario, synthetic_problem, SyntheticParams};
use crate::scenario::{build_neighborhoods, generate, read_scenario_file, ScenarioParams, SharingProblem};
use crate::units::db_to_lin;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LIQUIDMAAS_OUT";

pub const EXIT_OK: u8 = 0;
/// I/O and other runtime failures.
pub const EXIT_RUNTIME: u8 = 1;
/// Unreadable config, scenario or allocation files (clap also uses 2).
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_INFEASIBLE_PARAMS: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. }
        | Error::Csv(_)
        | Error::InvalidScenario(_)
        | Error::UnknownEntry { .. }
        | Error::OutOfBox { .. }
        | Error::NonPositiveSinr { .. } => EXIT_PARSE,
        Error::InvalidParameter { .. } | Error::InstanceTooLarge { .. } => EXIT_INFEASIBLE_PARAMS,
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::Io { .. } => EXIT_RUNTIME,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScenarioSource {
    /// Hex layout and radio model from `[scenario]`, dropped with `seed`.
    Generated,
    /// The four-cell, seven-user topology of the introduction.
    Fig1,
    /// SINRs drawn directly, no geometry.
    Synthetic { num_cells: usize, users_per_cell: usize },
    /// A scenario file written by `generate`. The file carries its own
    /// threshold and neighbourhoods.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NoComp,
    GreedyMaas,
    Randomized,
    Liquidmaas,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::NoComp, Algorithm::Randomized, Algorithm::Liquidmaas, Algorithm::GreedyMaas];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::NoComp => "no_comp",
            Algorithm::GreedyMaas => "greedy_maas",
            Algorithm::Randomized => "randomized",
            Algorithm::Liquidmaas => "liquidmaas",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub source: ScenarioSource,
    /// Layout and radio parameters for generated scenarios.
    pub scenario: ScenarioParams,
    /// Admission threshold for helper cells.
    pub s_min_db: f64,
    pub l_a: usize,
    /// One value, or a strictly increasing list for `sweep`.
    #[serde(deserialize_with = "one_or_many")]
    pub l_t_bar: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    /// `eps2` is replaced by `egress_tol_rel · L_T̄` for every run.
    pub solver: SolverConfig,
    pub egress_tol_rel: f64,
    /// Whether randomized egress control hands leftover headroom to the
    /// first request that does not fit.
    pub randomized_topup: bool,
    /// Sweep worker count; all logical cores when absent.
    pub threads: Option<usize>,
    /// Sharing-bit cap for the brute-force oracle in `validate`.
    pub brute_force_max_bits: usize,
    /// Stopping tolerance of the centralized relaxed oracle.
    pub relaxed_tol: f64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            source: ScenarioSource::Generated,
            scenario: ScenarioParams::default(),
            s_min_db: -10.0,
            l_a: 3,
            l_t_bar: vec![1.0],
            algorithms: Algorithm::ALL.to_vec(),
            solver: SolverConfig::default(),
            egress_tol_rel: 1e-3,
            randomized_topup: false,
            threads: None,
            brute_force_max_bits: 24,
            relaxed_tol: 1e-7,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse { path: origin.into(), reason: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_t_bar.is_empty() {
            return Err(Error::param("l_t_bar", "needs at least one value"));
        }
        if let Some(v) = self.l_t_bar.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::param("l_t_bar", format!("{v} must be finite and non-negative")));
        }
        if self.l_t_bar.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("l_t_bar", "sweep values must be strictly increasing"));
        }
        if !self.s_min_db.is_finite() {
            return Err(Error::param("s_min_db", "must be finite"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::param("algorithms", "needs at least one algorithm"));
        }
        if !(self.egress_tol_rel > 0.0 && self.egress_tol_rel.is_finite()) {
            return Err(Error::param("egress_tol_rel", "must be positive"));
        }
        if !(self.relaxed_tol > 0.0 && self.relaxed_tol < 1.0) {
            return Err(Error::param("relaxed_tol", "must lie in (0, 1)"));
        }
        if self.threads == Some(0) {
            return Err(Error::param("threads", "must be at least 1"));
        }
        if let ScenarioSource::Synthetic { num_cells, users_per_cell } = self.source {
            if num_cells == 0 || users_per_cell == 0 {
                return Err(Error::param("source", "synthetic scenarios need cells and users"));
            }
        }
        self.solver.validate()?;
        self.scenario.radio.validate()
    }

    /// The single egress limit of a `solve` or `compare` run.
    pub fn single_l_t_bar(&self) -> Result<f64> {
        match self.l_t_bar.as_slice() {
            [v] => Ok(*v),
            _ => Err(Error::param("l_t_bar", "this command takes one value; use `sweep` for lists")),
        }
    }

    /// Solver settings for one egress limit.
    pub fn solver_for(&self, l_t_bar: f64) -> SolverConfig {
        SolverConfig { eps2: (self.egress_tol_rel * l_t_bar).max(1e-12), ..self.solver.clone() }
    }

    /// Builds the problem for `l_t_bar`.
    pub fn load_problem(&self, l_t_bar: f64) -> Result<SharingProblem> {
        let s_min = db_to_lin(self.s_min_db);
        match &self.source {
            ScenarioSource::Generated => {
                build_neighborhoods(generate(&self.scenario, self.seed)?, s_min, self.l_a, l_t_bar)
            }
            ScenarioSource::Fig1 => build_neighborhoods(fig1_scenario(), s_min, self.l_a, l_t_bar),
            &ScenarioSource::Synthetic { num_cells, users_per_cell } => {
                let params = SyntheticParams {
                    num_cells,
                    users_per_cell,
                    s_min_db: self.s_min_db,
                    l_a: self.l_a,
                    l_t_bar,
                    ..SyntheticParams::default()
                };
                Ok(synthetic_problem(&params, self.seed))
            }
            ScenarioSource::File { path } => read_scenario_file(path, self.l_a, l_t_bar),
        }
    }
}
