use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::svg::{line_chart, Series};
use super::{Algorithm, ExperimentConfig};
use crate::baselines::{greedy_maas, no_comp, randomized_egress};
use crate::dual::{self, write_trace_csv, SolverReport};
use crate::error::{Error, Result};
use crate::oracles::{brute_force_integer_with_limit, centralized_relaxed};
use crate::problem::{combined_snr, objective, residuals, write_allocation_csv, SharingAllocation};
use crate::scenario::{write_scenario_file, SharingProblem};
use crate::units::nats_to_bits;

// Entries closer than this to 0 or 1 count as integral.
const FRACTIONAL_TOL: f64 = 1e-6;

fn prepare(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    write_text(&cfg.out_dir.join("config.toml"), &cfg.to_toml())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    write_text(path, &text)
}

fn thread_pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::param("threads", e.to_string()))
}

/// Per-user rate `β_k log2 g_k` in bit/s/Hz of the cell bandwidth.
fn user_rates(problem: &SharingProblem, allocation: &SharingAllocation) -> Vec<f64> {
    (0..problem.num_users()).map(|k| problem.beta(k) * combined_snr(problem, k, allocation).log2()).collect()
}

/// Nearest-rank percentile of an unsorted sample.
fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

fn max_fractional(allocation: &SharingAllocation) -> usize {
    (0..allocation.num_users()).map(|k| allocation.fractional_count(k, FRACTIONAL_TOL)).max().unwrap_or(0)
}

pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    pub allocation: SharingAllocation,
    /// LiquidMAAS only.
    pub report: Option<SolverReport>,
    pub wall_time_s: f64,
}

/// Runs one algorithm on `problem` with the config's solver settings.
pub fn run_algorithm(problem: &SharingProblem, algorithm: Algorithm, cfg: &ExperimentConfig) -> Result<AlgorithmRun> {
    let start = Instant::now();
    let (allocation, report) = match algorithm {
        Algorithm::NoComp => (no_comp(problem), None),
        Algorithm::GreedyMaas => (greedy_maas(problem), None),
        Algorithm::Randomized => (randomized_egress(problem, cfg.seed, cfg.randomized_topup), None),
        Algorithm::Liquidmaas => {
            let (a, r) = dual::run(problem, &cfg.solver_for(problem.l_t_bar()))?;
            (a, Some(r))
        }
    };
    Ok(AlgorithmRun { algorithm, allocation, report, wall_time_s: start.elapsed().as_secs_f64() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateSummary {
    pub path: PathBuf,
    pub num_cells: usize,
    pub num_users: usize,
    pub mean_ingress: f64,
    pub num_sharing_vars: usize,
}

impl fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario   {}", self.path.display())?;
        writeln!(f, "cells      {}", self.num_cells)?;
        writeln!(f, "users      {}", self.num_users)?;
        writeln!(f, "mean |N_R| {:.3}", self.mean_ingress)?;
        write!(f, "sharing    {} variables", self.num_sharing_vars)
    }
}

/// Writes `scenario.json` with the SINR matrix and neighbourhoods.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<GenerateSummary> {
    prepare(cfg)?;
    let problem = cfg.load_problem(cfg.l_t_bar[0])?;
    let path = cfg.out_dir.join("scenario.json");
    write_scenario_file(&path, &problem)?;
    let k = problem.num_users();
    let mean_ingress = if k == 0 { 0.0 } else { problem.num_sharing_vars() as f64 / k as f64 };
    Ok(GenerateSummary {
        path,
        num_cells: problem.num_cells(),
        num_users: k,
        mean_ingress,
        num_sharing_vars: problem.num_sharing_vars(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub algorithm: Algorithm,
    pub num_cells: usize,
    pub num_users: usize,
    pub l_a: usize,
    pub l_t_bar: f64,
    pub objective_nats: f64,
    pub wsr_bits: f64,
    pub feasible: bool,
    pub max_egress_violation: f64,
    pub max_ingress_violation: f64,
    pub max_fractional_per_user: usize,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub wall_time_s: f64,
}

impl SolveSummary {
    fn new(problem: &SharingProblem, run: &AlgorithmRun, cfg: &ExperimentConfig) -> Self {
        let obj = objective(problem, &run.allocation);
        let r = residuals(problem, &run.allocation);
        let solver = cfg.solver_for(problem.l_t_bar());
        SolveSummary {
            algorithm: run.algorithm,
            num_cells: problem.num_cells(),
            num_users: problem.num_users(),
            l_a: problem.l_a(),
            l_t_bar: problem.l_t_bar(),
            objective_nats: obj,
            wsr_bits: nats_to_bits(obj),
            feasible: r.max_egress_violation() <= solver.eps2 && r.max_ingress_violation() <= solver.eps1,
            max_egress_violation: r.max_egress_violation(),
            max_ingress_violation: r.max_ingress_violation(),
            max_fractional_per_user: max_fractional(&run.allocation),
            iterations: run.report.as_ref().map(|r| r.iterations),
            converged: run.report.as_ref().map(|r| r.converged),
            wall_time_s: run.wall_time_s,
        }
    }
}

impl fmt::Display for SolveSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "algorithm        {}", self.algorithm)?;
        writeln!(f, "network          {} cells, {} users", self.num_cells, self.num_users)?;
        writeln!(f, "limits           L_A = {}, L_T = {}", self.l_a, self.l_t_bar)?;
        writeln!(f, "objective        {:.6} nats ({:.6} bit WSR)", self.objective_nats, self.wsr_bits)?;
        writeln!(
            f,
            "violation        egress {:.3e}, ingress {:.3e} ({})",
            self.max_egress_violation,
            self.max_ingress_violation,
            if self.feasible { "feasible" } else { "INFEASIBLE" }
        )?;
        writeln!(f, "fractional/user  {}", self.max_fractional_per_user)?;
        if let (Some(it), Some(conv)) = (self.iterations, self.converged) {
            writeln!(f, "iterations       {it} ({})", if conv { "converged" } else { "NOT converged" })?;
        }
        write!(f, "wall time        {:.3} s", self.wall_time_s)
    }
}

/// Runs `algorithm` at the single configured egress limit and writes the
/// allocation, the summary and, for LiquidMAAS, the iteration trace.
pub fn cmd_solve(cfg: &ExperimentConfig, algorithm: Algorithm) -> Result<SolveSummary> {
    prepare(cfg)?;
    let problem = cfg.load_problem(cfg.single_l_t_bar()?)?;
    let run = run_algorithm(&problem, algorithm, cfg)?;
    let name = algorithm.name();
    write_allocation_csv(&problem, &run.allocation, create(&cfg.out_dir.join(format!("allocation_{name}.csv")))?)?;
    if let Some(report) = &run.report {
        write_trace_csv(report, create(&cfg.out_dir.join(format!("trace_{name}.csv")))?)?;
        write_text(&cfg.out_dir.join(format!("demand_{name}.svg")), &demand_chart(report, problem.l_t_bar()))?;
    }
    let summary = SolveSummary::new(&problem, &run, cfg);
    write_json(&cfg.out_dir.join(format!("summary_{name}.json")), &summary)?;
    Ok(summary)
}

fn demand_chart(report: &SolverReport, l_t_bar: f64) -> String {
    let num_cells = report.egress_demand_trace.first().map_or(0, Vec::len);
    let mut series: Vec<Series> = (0..num_cells)
        .map(|i| {
            let pts = report.egress_demand_trace.iter().enumerate().map(|(t, d)| ((t + 1) as f64, d[i])).collect();
            Series::new(format!("cell {i}"), pts)
        })
        .collect();
    series.push(Series::new("L_T", vec![(1.0, l_t_bar), (report.iterations as f64, l_t_bar)]).dashed());
    line_chart("Egress demand per cell", "iteration", "egress demand", &series)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub l_t_bar: f64,
    pub algorithm: Algorithm,
    pub wsr_bits: f64,
    /// WSR over the No CoMP WSR.
    pub gain: f64,
    pub rate_p5: f64,
    pub rate_p50: f64,
    pub rate_p95: f64,
    pub max_egress_violation: f64,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub l_t_bar: f64,
    pub rows: Vec<CompareRow>,
    /// `rates[a][k]`: rate of user `k` under `rows[a].algorithm`.
    pub rates: Vec<Vec<f64>>,
    pub no_comp_rates: Vec<f64>,
}

impl CompareTable {
    pub fn row(&self, algorithm: Algorithm) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    /// False when a LiquidMAAS run stopped at the iteration cap.
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged != Some(false))
    }
}

impl fmt::Display for CompareTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "L_T = {}", self.l_t_bar)?;
        writeln!(f, "{:<12} {:>12} {:>8} {:>9} {:>9} {:>9}", "algorithm", "WSR [bit]", "gain", "rate p5", "p50", "p95")?;
        for r in &self.rows {
            let mark = if r.converged == Some(false) { "  (not converged)" } else { "" };
            writeln!(
                f,
                "{:<12} {:>12.4} {:>8.4} {:>9.4} {:>9.4} {:>9.4}{mark}",
                r.algorithm.name(),
                r.wsr_bits,
                r.gain,
                r.rate_p5,
                r.rate_p50,
                r.rate_p95
            )?;
        }
        Ok(())
    }
}

/// Runs every configured algorithm on one problem.
pub fn compare_problem(problem: &SharingProblem, cfg: &ExperimentConfig) -> Result<CompareTable> {
    let baseline = nats_to_bits(objective(problem, &no_comp(problem)));
    let no_comp_rates = user_rates(problem, &no_comp(problem));
    let mut rows = Vec::new();
    let mut rates = Vec::new();
    for &algorithm in &cfg.algorithms {
        let run = run_algorithm(problem, algorithm, cfg)?;
        let wsr = nats_to_bits(objective(problem, &run.allocation));
        let r = user_rates(problem, &run.allocation);
        rows.push(CompareRow {
            l_t_bar: problem.l_t_bar(),
            algorithm,
            wsr_bits: wsr,
            gain: wsr / baseline,
            rate_p5: percentile(&r, 5.0),
            rate_p50: percentile(&r, 50.0),
            rate_p95: percentile(&r, 95.0),
            max_egress_violation: residuals(problem, &run.allocation).max_egress_violation(),
            iterations: run.report.as_ref().map(|r| r.iterations),
            converged: run.report.as_ref().map(|r| r.converged),
        });
        rates.push(r);
    }
    Ok(CompareTable { l_t_bar: problem.l_t_bar(), rows, rates, no_comp_rates })
}

/// Runs all configured algorithms at the single egress limit and writes
/// `compare.csv`, per-user `rates.csv` and a CDF of per-user rate gains.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<CompareTable> {
    prepare(cfg)?;
    let problem = cfg.load_problem(cfg.single_l_t_bar()?)?;
    let table = compare_problem(&problem, cfg)?;
    write_rows(&cfg.out_dir.join("compare.csv"), &table.rows)?;

    let path = cfg.out_dir.join("rates.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let mut header = vec!["user_id".to_string(), "serving_cell".to_string()];
    header.extend(table.rows.iter().map(|r| format!("rate_{}", r.algorithm)));
    w.write_record(&header)?;
    for k in 0..problem.num_users() {
        let mut rec = vec![k.to_string(), problem.scenario().serving_cell(k).to_string()];
        rec.extend(table.rates.iter().map(|r| r[k].to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let series: Vec<Series> = table
        .rows
        .iter()
        .zip(&table.rates)
        .map(|(row, rates)| {
            let gains: Vec<f64> = rates.iter().zip(&table.no_comp_rates).map(|(r, b)| r / b).collect();
            Series::cdf(row.algorithm.name(), &gains)
        })
        .collect();
    write_text(
        &cfg.out_dir.join("rate_gain_cdf.svg"),
        &line_chart("Per-user rate gain over No CoMP", "rate gain", "CDF", &series),
    )?;
    Ok(table)
}

/// One compare per egress limit, run on a worker pool. Writes `sweep.csv`
/// (one row per limit, one gain column per algorithm) and `sweep.svg`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<CompareTable>> {
    prepare(cfg)?;
    let base = cfg.load_problem(cfg.l_t_bar[0])?;
    let pool = thread_pool(cfg)?;
    let tables: Vec<CompareTable> = pool.install(|| {
        cfg.l_t_bar
            .par_iter()
            .map(|&lt| compare_problem(&base.with_limits(cfg.l_a, lt)?, cfg))
            .collect::<Result<_>>()
    })?;

    let path = cfg.out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let mut header = vec!["l_t_bar".to_string()];
    header.extend(cfg.algorithms.iter().map(|a| format!("gain_{a}")));
    header.push("converged".to_string());
    w.write_record(&header)?;
    for t in &tables {
        let mut rec = vec![t.l_t_bar.to_string()];
        rec.extend(t.rows.iter().map(|r| r.gain.to_string()));
        rec.push(t.all_converged().to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let series: Vec<Series> = cfg
        .algorithms
        .iter()
        .enumerate()
        .map(|(a, alg)| Series::new(alg.name(), tables.iter().map(|t| (t.l_t_bar, t.rows[a].gain)).collect()))
        .collect();
    write_text(&cfg.out_dir.join("sweep.svg"), &line_chart("WSR gain over No CoMP", "egress limit L_T", "WSR gain", &series))?;
    Ok(tables)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateRow {
    pub l_t_bar: f64,
    pub liquidmaas: f64,
    pub relaxed: f64,
    /// `(relaxed − liquidmaas) / |relaxed|`.
    pub rel_error: f64,
    /// Certified duality gap of the relaxed oracle.
    pub relaxed_gap: f64,
    /// Integer optimum, when the instance is small enough to enumerate.
    pub brute_force: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_egress_violation: f64,
    pub max_fractional_per_user: usize,
}

impl fmt::Display for ValidateRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "L_T = {}: liquidmaas {:.6}, relaxed {:.6} (gap {:.1e}), rel error {:.2e}",
            self.l_t_bar, self.liquidmaas, self.relaxed, self.relaxed_gap, self.rel_error
        )?;
        if let Some(b) = self.brute_force {
            write!(f, ", integer {b:.6}")?;
        }
        write!(f, ", {} iterations{}", self.iterations, if self.converged { "" } else { " (NOT converged)" })
    }
}

/// Compares LiquidMAAS with the oracles at every configured egress limit and
/// writes `validate.csv`. Objectives are in nats.
pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<Vec<ValidateRow>> {
    prepare(cfg)?;
    let base = cfg.load_problem(cfg.l_t_bar[0])?;
    let pool = thread_pool(cfg)?;
    let rows: Vec<ValidateRow> = pool.install(|| {
        cfg.l_t_bar
            .par_iter()
            .map(|&lt| {
                let problem = base.with_limits(cfg.l_a, lt)?;
                let run = run_algorithm(&problem, Algorithm::Liquidmaas, cfg)?;
                let report = run.report.expect("liquidmaas has a report");
                let relaxed = centralized_relaxed(&problem, cfg.relaxed_tol)?;
                let brute_force = if problem.num_sharing_vars() <= cfg.brute_force_max_bits {
                    Some(brute_force_integer_with_limit(&problem, Some(cfg.brute_force_max_bits))?.1)
                } else {
                    None
                };
                let lm = objective(&problem, &run.allocation);
                Ok(ValidateRow {
                    l_t_bar: lt,
                    liquidmaas: lm,
                    relaxed: relaxed.objective,
                    rel_error: (relaxed.objective - lm) / relaxed.objective.abs().max(f64::MIN_POSITIVE),
                    relaxed_gap: relaxed.duality_gap,
                    brute_force,
                    iterations: report.iterations,
                    converged: report.converged,
                    max_egress_violation: residuals(&problem, &run.allocation).max_egress_violation(),
                    max_fractional_per_user: max_fractional(&run.allocation),
                })
            })
            .collect::<Result<_>>()
    })?;
    write_rows(&cfg.out_dir.join("validate.csv"), &rows)?;
    Ok(rows)
}
