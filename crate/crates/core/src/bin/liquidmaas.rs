use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use liquidmaas::experiment::{self, Algorithm, ExperimentConfig, ScenarioSource, OUT_DIR_ENV};
use liquidmaas::{ConvergenceMode, PrimalRecovery, StepSchedule};

#[derive(Parser)]
#[command(name = "liquidmaas", version, about = "Uplink CoMP helper-cell allocation experiments")]
struct Cli {
    /// TOML experiment config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Read the scenario from a file written by `generate`.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Base step size ν.
    #[arg(long, global = true)]
    nu: Option<f64>,
    /// Aperture limit L_A.
    #[arg(long, global = true)]
    la: Option<usize>,
    /// Egress limit L_T; a comma-separated list for `sweep` and `validate`.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    ltbar: Option<Vec<f64>>,
    /// Helper admission threshold in dB.
    #[arg(long = "smin-db", global = true, allow_negative_numbers = true)]
    smin_db: Option<f64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[arg(long, global = true, value_enum)]
    schedule: Option<Schedule>,
    #[arg(long, global = true, value_enum)]
    recovery: Option<Recovery>,
    #[arg(long = "max-iters", global = true)]
    max_iters: Option<usize>,
    /// Worker threads for `sweep` and `validate`.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a scenario and write it to `scenario.json`.
    Generate,
    /// Run one algorithm.
    Solve {
        #[arg(long, value_enum, default_value_t = Algorithm::Liquidmaas)]
        algorithm: Algorithm,
    },
    /// Run every algorithm and tabulate WSR gains over No CoMP.
    Compare,
    /// Compare over a list of egress limits.
    Sweep,
    /// Check LiquidMAAS against the relaxed and integer oracles.
    Validate,
    /// Print the resolved config as TOML.
    Config,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Preset {
    Generated,
    Fig1,
    Synthetic,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Mode {
    Paper,
    Kkt,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Schedule {
    Constant,
    InvSqrt,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Recovery {
    Last,
    Averaged,
}

fn resolve(cli: &Cli) -> liquidmaas::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    match cli.preset {
        Some(Preset::Generated) => cfg.source = ScenarioSource::Generated,
        Some(Preset::Fig1) => cfg.source = ScenarioSource::Fig1,
        Some(Preset::Synthetic) => cfg.source = ScenarioSource::Synthetic { num_cells: 10, users_per_cell: 3 },
        None => {}
    }
    if let Some(path) = &cli.scenario {
        cfg.source = ScenarioSource::File { path: path.clone() };
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.nu {
        cfg.solver.nu = v;
    }
    if let Some(v) = cli.la {
        cfg.l_a = v;
    }
    if let Some(v) = &cli.ltbar {
        cfg.l_t_bar = v.clone();
    }
    if let Some(v) = cli.smin_db {
        cfg.s_min_db = v;
    }
    if let Some(m) = cli.mode {
        cfg.solver.convergence_mode = match m {
            Mode::Paper => ConvergenceMode::Paper,
            Mode::Kkt => ConvergenceMode::Kkt,
        };
    }
    if let Some(s) = cli.schedule {
        cfg.solver.schedule = match s {
            Schedule::Constant => StepSchedule::Constant,
            Schedule::InvSqrt => StepSchedule::InverseSqrt,
        };
    }
    if let Some(r) = cli.recovery {
        cfg.solver.primal_recovery = match r {
            Recovery::Last => PrimalRecovery::LastIterate,
            Recovery::Averaged => PrimalRecovery::Averaged,
        };
    }
    if let Some(v) = cli.max_iters {
        cfg.solver.max_iters = v;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(v) = &cli.out {
        cfg.out_dir = v.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Returns whether every LiquidMAAS run converged.
fn execute(cli: &Cli, cfg: &ExperimentConfig) -> liquidmaas::Result<bool> {
    match cli.command {
        Command::Generate => {
            println!("{}", experiment::cmd_generate(cfg)?);
            Ok(true)
        }
        Command::Solve { algorithm } => {
            let s = experiment::cmd_solve(cfg, algorithm)?;
            println!("{s}");
            Ok(s.converged != Some(false))
        }
        Command::Compare => {
            let t = experiment::cmd_compare(cfg)?;
            print!("{t}");
            Ok(t.all_converged())
        }
        Command::Sweep => {
            let tables = experiment::cmd_sweep(cfg)?;
            for t in &tables {
                println!("{t}");
            }
            Ok(tables.iter().all(|t| t.all_converged()))
        }
        Command::Validate => {
            let rows = experiment::cmd_validate(cfg)?;
            for r in &rows {
                println!("{r}");
            }
            Ok(rows.iter().all(|r| r.converged))
        }
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = resolve(&cli).and_then(|cfg| execute(&cli, &cfg));
    match outcome {
        Ok(true) => ExitCode::from(experiment::EXIT_OK),
        Ok(false) => {
            eprintln!("liquidmaas: did not converge within the iteration limit (artifacts written)");
            ExitCode::from(experiment::EXIT_NOT_CONVERGED)
        }
        Err(e) => {
            eprintln!("liquidmaas: {e}");
            ExitCode::from(experiment::exit_code(&e))
        }
    }
}
