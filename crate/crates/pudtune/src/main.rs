use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pudtune::config::Config;
use pudtune::experiment::{self, DriftCondition, SWEEP_CONFIGS};
use pudtune::report::{self, ExperimentReport};
use pudtune::table_io;
use pudtune_core::arith::{op_cost, ArithOp};
use pudtune_core::metrics::{capacity_overhead, throughput};
use pudtune_core::{correctable_range, FracConfig, Mode, OffsetLadder};

/// Charge-level simulator of in-DRAM majority operations with multi-level
/// offset calibration.
#[derive(Parser)]
#[command(name = "pudtune", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML file with defaults for every flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Simulated columns per subarray.
    #[arg(long, global = true)]
    cols: Option<usize>,
    /// Rows per subarray.
    #[arg(long, global = true)]
    rows: Option<usize>,
    /// Threshold variation, V_DD.
    #[arg(long, global = true)]
    sigma_tau: Option<f64>,
    /// Per-sensing noise, V_DD.
    #[arg(long, global = true)]
    sigma_sense: Option<f64>,
    /// Calibration Frac counts as x,y,z.
    #[arg(long, global = true, value_parser = parse_frac)]
    frac: Option<FracConfig>,
    /// CSV report destination.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Calibration table file.
    #[arg(long, global = true)]
    table: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate a sampled subarray and write the table to --table.
    Calibrate,
    /// Measure the error-prone column ratio of one arm.
    Ecr {
        #[arg(long, value_enum, default_value_t = Method::Pudtune)]
        method: Method,
        /// Random inputs per measurement.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Throughput from a given or measured error-free column count.
    Throughput {
        #[arg(long, value_enum, default_value_t = Method::Pudtune)]
        method: Method,
        /// Skip measurement and use this many error-free columns.
        #[arg(long)]
        error_free: Option<usize>,
    },
    /// Baseline against calibrated arm: ECR and throughput.
    Table1 {
        /// Number of consecutive seeds to run.
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Calibrate and measure several Frac configurations.
    SweepFrac {
        /// Semicolon-separated list, e.g. "0,0,0;2,1,0".
        #[arg(long)]
        configs: Option<String>,
    },
    /// Re-measure a calibrated table under temperature and time drift.
    Drift {
        /// Temperatures in degrees C.
        #[arg(long, value_delimiter = ',', default_values_t = vec![40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0])]
        temps: Vec<f64>,
        /// Elapsed days, applied at every temperature.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0])]
        days: Vec<f64>,
        /// Replay the calibration-time noise and inputs instead of fresh ones.
        #[arg(long)]
        replay_noise: bool,
    },
    /// Print the offset ladder of --frac.
    Ladder,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Baseline,
    Pudtune,
}

fn parse_frac(s: &str) -> Result<FracConfig, String> {
    s.parse::<FracConfig>().map_err(|e| e.to_string())
}

fn resolve(g: &Global) -> anyhow::Result<Config> {
    let mut cfg = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.cols {
        cfg.cols = v;
    }
    if let Some(v) = g.rows {
        cfg.rows = v;
    }
    if let Some(v) = g.sigma_tau {
        cfg.sigma_tau = v;
    }
    if let Some(v) = g.sigma_sense {
        cfg.sigma_sense = v;
    }
    if let Some(v) = g.frac {
        cfg.frac = v.counts();
    }
    if g.out.is_some() {
        cfg.out.clone_from(&g.out);
    }
    if g.table.is_some() {
        cfg.table.clone_from(&g.table);
    }
    cfg.validate()?;
    if !cfg.geometry().rows_in_typical_range() {
        eprintln!(
            "warning: {} rows per subarray is outside the typical 256..=1024 range",
            cfg.rows
        );
    }
    Ok(cfg)
}

fn emit(cfg: &Config, rows: &[ExperimentReport]) -> anyhow::Result<()> {
    print!("{}", report::render_table(rows));
    if let Some(path) = &cfg.out {
        report::save_csv(path, rows)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn extrapolation_note(cfg: &Config) {
    let l = &cfg.latency;
    println!(
        "throughput extrapolated from {} simulated columns to {} columns x {} banks x {} channels",
        cfg.cols, l.hw_cols, l.banks, l.channels
    );
}

fn overhead_line(cfg: &Config) {
    println!(
        "capacity overhead: {} (3 of {} rows)",
        report::format_overhead(capacity_overhead(3, cfg.rows)),
        cfg.rows
    );
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve(&cli.global)?;
    match cli.command {
        Command::Calibrate => {
            let path = cfg
                .table
                .clone()
                .context("calibrate needs --table <file> to write the table to")?;
            let profile = experiment::sample(&cfg, cfg.seed)?;
            let (_, _, table) =
                experiment::calibrate_state(&cfg, profile, cfg.frac_config()?, cfg.seed)?;
            table_io::save_table(&table, &path)?;
            let ladder = table.ladder();
            let mut hist = vec![0usize; ladder.len()];
            for &l in table.levels() {
                hist[l] += 1;
            }
            println!(
                "calibrated {} columns with T_{{{}}}",
                table.n_cols(),
                table.frac_config()
            );
            for (e, n) in ladder.entries().iter().zip(hist) {
                println!("  offset {:+.4}: {n} columns", e.offset);
            }
            println!("wrote {}", path.display());
        }
        Command::Ecr { method, trials } => {
            let mut cfg = cfg;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            let arm = run_one(&cfg, method)?;
            println!(
                "{} ECR {:.4}% ({} of {} columns error-free, {} trials)",
                arm.mode.name(),
                100.0 * arm.measurement.ecr,
                arm.measurement.error_free,
                arm.measurement.n_cols(),
                arm.measurement.n_trials
            );
            if let Some(path) = &cfg.out {
                report::save_csv(path, &[arm.report(&cfg)])?;
                println!("wrote {}", path.display());
            }
        }
        Command::Throughput { method, error_free } => {
            let (mode, frac) = match method {
                Method::Baseline => (Mode::Baseline, cfg.baseline_frac_config()?),
                Method::Pudtune => (Mode::PudTune, cfg.frac_config()?),
            };
            let plan = experiment::plan(&cfg, mode, frac)?;
            let ef = match error_free {
                Some(n) => n,
                None => run_one(&cfg, method)?.measurement.error_free,
            };
            let model = cfg.latency_model();
            println!(
                "{} with {ef} of {} columns error-free",
                mode.name(),
                cfg.cols
            );
            for op in [ArithOp::Maj5, ArithOp::Maj3, ArithOp::Add8, ArithOp::Mul8] {
                let cost = op_cost(op, &plan);
                let t = throughput(ef, cfg.cols, &cost, &model)?;
                println!(
                    "  {:<5} {:>5} primitives  {:>10.3} GOPS",
                    op.name(),
                    cost.total(),
                    t / 1e9
                );
            }
            extrapolation_note(&cfg);
            overhead_line(&cfg);
        }
        Command::Table1 { seeds } => {
            let mut cfg = cfg;
            if let Some(n) = seeds {
                cfg.seeds = n;
            }
            let runs = experiment::run_table1_seeds(&cfg, &cfg.seed_list())?;
            let rows: Vec<ExperimentReport> = runs.iter().flat_map(|t| t.reports(&cfg)).collect();
            emit(&cfg, &rows)?;
            for t in &runs {
                println!(
                    "seed {}: error-free column ratio {:.3}",
                    t.seed,
                    t.error_free_ratio()
                );
            }
            extrapolation_note(&cfg);
            overhead_line(&cfg);
        }
        Command::SweepFrac { configs } => {
            let list: Vec<FracConfig> = match configs {
                Some(s) => s
                    .split(';')
                    .map(|c| c.trim().parse::<FracConfig>())
                    .collect::<Result<_, _>>()?,
                None => SWEEP_CONFIGS
                    .iter()
                    .map(|&[x, y, z]| FracConfig::new(x, y, z))
                    .collect::<Result<_, _>>()?,
            };
            let out = experiment::sweep_frac(&cfg, cfg.seed, &list)?;
            let rows: Vec<ExperimentReport> = out.iter().map(|a| a.report(&cfg)).collect();
            emit(&cfg, &rows)?;
            extrapolation_note(&cfg);
        }
        Command::Drift {
            temps,
            days,
            replay_noise,
        } => {
            let conditions: Vec<DriftCondition> = temps
                .iter()
                .flat_map(|&t| {
                    days.iter().map(move |&d| DriftCondition {
                        temperature: t,
                        days: d,
                    })
                })
                .collect();
            let fresh = cfg.drift.fresh_noise && !replay_noise;
            let run = experiment::run_drift(&cfg, cfg.seed, &conditions, fresh)?;
            println!(
                "calibrated at {} C: ECR {:.4}%",
                cfg.drift.t_cal,
                100.0 * run.at_calibration.measurement.ecr
            );
            emit(&cfg, &run.reports(&cfg))?;
        }
        Command::Ladder => {
            let frac = cfg.frac_config()?;
            let geometry = cfg.geometry();
            let ladder =
                OffsetLadder::enumerate(frac, pudtune_core::subarray::DEFAULT_FRAC_FACTOR)?;
            let range = correctable_range(&ladder, &geometry, 5)?;
            println!("T_{{{frac}}}: {} levels", ladder.len());
            println!(
                "{:>5} {:>7} {:>9} {:>10}   correctable tau",
                "level", "pattern", "offset", "shift V"
            );
            for (i, (e, iv)) in ladder.entries().iter().zip(&range.intervals).enumerate() {
                let [a, b, c] = e.pattern.bits();
                println!(
                    "{i:>5} {:>7} {:>+9.4} {:>+10.5}   [{:.4}, {:.4})",
                    format!("{}{}{}", a as u8, b as u8, c as u8),
                    e.offset,
                    e.offset * geometry.coupling(8),
                    iv.0,
                    iv.1
                );
            }
            println!(
                "correctable range ({:.4}, {:.4}){}",
                range.lo,
                range.hi,
                if range.contiguous { "" } else { " with gaps" }
            );
        }
    }
    Ok(())
}

fn run_one(cfg: &Config, method: Method) -> anyhow::Result<experiment::ArmOutcome> {
    let profile = experiment::sample(cfg, cfg.seed)?;
    match method {
        Method::Baseline => experiment::run_arm(
            cfg,
            &profile,
            Mode::Baseline,
            cfg.baseline_frac_config()?,
            cfg.seed,
            None,
        ),
        Method::Pudtune => {
            let table = match &cfg.table {
                Some(p) => Some(table_io::load_table(p, Some(cfg.cols))?),
                None => None,
            };
            let frac = match &table {
                Some(t) if cfg.frac != t.frac_config().counts() => {
                    bail!(
                        "calibration table was built for T_{{{}}} but --frac is {:?}",
                        t.frac_config(),
                        cfg.frac
                    )
                }
                _ => cfg.frac_config()?,
            };
            experiment::run_arm(cfg, &profile, Mode::PudTune, frac, cfg.seed, table)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
