//! Experiment pipelines: baseline against calibrated arms, Frac sweeps and drift studies.
//!
//! Every work item builds its own subarray and random streams from the
//! item's seed, so parallel and serial runs produce identical results.
//! All arms of one seed share the threshold profile and the measurement
//! inputs.

use anyhow::{bail, Context};
use pudtune_core::arith::{op_cost, ArithOp};
use pudtune_core::metrics::{capacity_overhead, measure_ecr, throughput, EcrMeasurement};
use pudtune_core::seed::{derive_seed, rng_for, STREAM_MEASURE_INPUTS, STREAM_SENSE_NOISE};
use pudtune_core::{
    calibrate, drift_profile, sample_profile, CalibrationTable, FracConfig, MajPlan, Mode,
    SenseAmpProfile, Subarray,
};
use rayon::prelude::*;

use crate::config::Config;
use crate::report::ExperimentReport;

/// The five configurations of the Frac sensitivity sweep.
pub const SWEEP_CONFIGS: [[u8; 3]; 5] = [[0, 0, 0], [1, 1, 1], [2, 2, 2], [2, 1, 0], [3, 2, 1]];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Throughputs {
    pub maj5: f64,
    pub add8: f64,
    pub mul8: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArmOutcome {
    pub mode: Mode,
    pub frac: FracConfig,
    pub seed: u64,
    pub measurement: EcrMeasurement,
    pub table: Option<CalibrationTable>,
    pub throughput: Throughputs,
    pub capacity_overhead: f64,
}

impl ArmOutcome {
    pub fn report(&self, cfg: &Config) -> ExperimentReport {
        self.report_as(cfg, self.mode.name().to_string(), 0.0)
    }

    pub fn report_as(
        &self,
        cfg: &Config,
        method: String,
        new_error_prone: f64,
    ) -> ExperimentReport {
        let [x, y, z] = self.frac.counts();
        let m = &self.measurement;
        ExperimentReport {
            method,
            frac_x: x,
            frac_y: y,
            frac_z: z,
            sigma_tau: cfg.sigma_tau,
            sigma_sense: cfg.sigma_sense,
            seed: self.seed,
            n_cols: m.n_cols(),
            n_trials: m.n_trials,
            ecr: m.ecr,
            error_free_cols: m.error_free,
            new_error_prone,
            tput_maj5_ops: self.throughput.maj5,
            tput_add8_ops: self.throughput.add8,
            tput_mul8_ops: self.throughput.mul8,
            capacity_overhead: self.capacity_overhead,
        }
    }
}

/// Seed of the subarray's sensing-noise stream for a run.
pub fn noise_seed(seed: u64) -> u64 {
    derive_seed(seed, STREAM_SENSE_NOISE)
}

pub fn sample(cfg: &Config, seed: u64) -> anyhow::Result<SenseAmpProfile> {
    Ok(sample_profile(cfg.cols, cfg.sigma_tau, seed)?)
}

pub fn new_state(cfg: &Config, profile: SenseAmpProfile, seed: u64) -> anyhow::Result<Subarray> {
    Ok(Subarray::new(
        cfg.geometry(),
        profile,
        cfg.noise(noise_seed(seed)),
    )?)
}

pub fn plan(cfg: &Config, mode: Mode, frac: FracConfig) -> anyhow::Result<MajPlan> {
    Ok(MajPlan::new(&cfg.geometry(), 5, mode, frac)?.with_copy_sensing(cfg.copy_sensing()))
}

/// ECR measurement number `k` of a run. Measurement 0 is the standard
/// one; other values give independent noise and input streams.
pub fn measure(
    cfg: &Config,
    state: &mut Subarray,
    plan: &MajPlan,
    table: Option<&CalibrationTable>,
    seed: u64,
    k: u64,
) -> anyhow::Result<EcrMeasurement> {
    state.reseed(derive_seed(noise_seed(seed), k));
    let mut rng = rng_for(derive_seed(seed, k), STREAM_MEASURE_INPUTS);
    Ok(measure_ecr(state, plan, table, cfg.trials, &mut rng)?)
}

pub fn throughputs(cfg: &Config, plan: &MajPlan, error_free: usize) -> anyhow::Result<Throughputs> {
    let model = cfg.latency_model();
    let t = |op| throughput(error_free, cfg.cols, &op_cost(op, plan), &model);
    Ok(Throughputs {
        maj5: t(ArithOp::Maj5)?,
        add8: t(ArithOp::Add8)?,
        mul8: t(ArithOp::Mul8)?,
    })
}

/// Calibrates a fresh subarray over `profile`.
pub fn calibrate_state(
    cfg: &Config,
    profile: SenseAmpProfile,
    frac: FracConfig,
    seed: u64,
) -> anyhow::Result<(Subarray, MajPlan, CalibrationTable)> {
    let mut state = new_state(cfg, profile, seed)?;
    let plan = plan(cfg, Mode::PudTune, frac)?;
    let table =
        calibrate(&mut state, &plan, &cfg.calib_params(seed)).context("calibration failed")?;
    Ok((state, plan, table))
}

/// One arm: calibrate when calibrated and no table is supplied, then
/// measure ECR and derive throughput. Baseline arms ignore `table`.
pub fn run_arm(
    cfg: &Config,
    profile: &SenseAmpProfile,
    mode: Mode,
    frac: FracConfig,
    seed: u64,
    table: Option<CalibrationTable>,
) -> anyhow::Result<ArmOutcome> {
    let (mut state, plan, table) = match (mode, table) {
        (Mode::Baseline, _) => (
            new_state(cfg, profile.clone(), seed)?,
            plan(cfg, mode, frac)?,
            None,
        ),
        (Mode::PudTune, Some(t)) => {
            if t.frac_config() != frac {
                bail!(
                    "calibration table was built for T_{{{}}}, run uses T_{{{}}}",
                    t.frac_config(),
                    frac
                );
            }
            (
                new_state(cfg, profile.clone(), seed)?,
                plan(cfg, mode, frac)?,
                Some(t),
            )
        }
        (Mode::PudTune, None) => {
            let (s, p, t) = calibrate_state(cfg, profile.clone(), frac, seed)?;
            (s, p, Some(t))
        }
    };
    let measurement = measure(cfg, &mut state, &plan, table.as_ref(), seed, 0)?;
    let throughput = throughputs(cfg, &plan, measurement.error_free)?;
    let overhead = match mode {
        Mode::Baseline => 0.0,
        Mode::PudTune => capacity_overhead(plan.reserved_calib_storage.len(), cfg.rows),
    };
    Ok(ArmOutcome {
        mode,
        frac,
        seed,
        measurement,
        table,
        throughput,
        capacity_overhead: overhead,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table1 {
    pub seed: u64,
    pub profile: SenseAmpProfile,
    pub baseline: ArmOutcome,
    pub pudtune: ArmOutcome,
}

impl Table1 {
    pub fn reports(&self, cfg: &Config) -> [ExperimentReport; 2] {
        [self.baseline.report(cfg), self.pudtune.report(cfg)]
    }

    /// PUDTune error-free columns over baseline error-free columns.
    pub fn error_free_ratio(&self) -> f64 {
        self.pudtune.measurement.error_free as f64 / self.baseline.measurement.error_free as f64
    }
}

/// Baseline `B_{x,0,0}` against calibrated `T_{x,y,z}` on one profile.
pub fn run_table1(cfg: &Config, seed: u64) -> anyhow::Result<Table1> {
    let profile = sample(cfg, seed)?;
    let baseline = run_arm(
        cfg,
        &profile,
        Mode::Baseline,
        cfg.baseline_frac_config()?,
        seed,
        None,
    )?;
    let pudtune = run_arm(cfg, &profile, Mode::PudTune, cfg.frac_config()?, seed, None)?;
    Ok(Table1 {
        seed,
        profile,
        baseline,
        pudtune,
    })
}

pub fn run_table1_seeds(cfg: &Config, seeds: &[u64]) -> anyhow::Result<Vec<Table1>> {
    seeds.par_iter().map(|&s| run_table1(cfg, s)).collect()
}

/// Calibrates and measures each Frac configuration on the same profile.
pub fn sweep_frac(
    cfg: &Config,
    seed: u64,
    configs: &[FracConfig],
) -> anyhow::Result<Vec<ArmOutcome>> {
    let profile = sample(cfg, seed)?;
    configs
        .par_iter()
        .map(|&f| run_arm(cfg, &profile, Mode::PudTune, f, seed, None))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftCondition {
    pub temperature: f64,
    pub days: f64,
}

impl DriftCondition {
    pub fn label(&self) -> String {
        format!("{}C+{}d", self.temperature, self.days)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftOutcome {
    pub condition: DriftCondition,
    pub measurement: EcrMeasurement,
    pub throughput: Throughputs,
    /// Columns error-free at calibration but error-prone now, over all
    /// columns.
    pub new_error_prone: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftRun {
    pub at_calibration: ArmOutcome,
    pub conditions: Vec<DriftOutcome>,
}

impl DriftRun {
    pub fn reports(&self, cfg: &Config) -> Vec<ExperimentReport> {
        self.conditions
            .iter()
            .map(|c| {
                let arm = ArmOutcome {
                    measurement: c.measurement.clone(),
                    throughput: c.throughput,
                    table: None,
                    ..self.at_calibration.clone()
                };
                arm.report_as(
                    cfg,
                    format!("pudtune@{}", c.condition.label()),
                    c.new_error_prone,
                )
            })
            .collect()
    }
}

/// Calibrates once at the calibration temperature, then re-measures the
/// same table under each drifted condition. With `fresh_noise` each
/// condition uses new noise and input streams; without it every
/// measurement replays the calibration-time streams.
pub fn run_drift(
    cfg: &Config,
    seed: u64,
    conditions: &[DriftCondition],
    fresh_noise: bool,
) -> anyhow::Result<DriftRun> {
    let profile = sample(cfg, seed)?;
    let frac = cfg.frac_config()?;
    let at_calibration = run_arm(cfg, &profile, Mode::PudTune, frac, seed, None)?;
    let table = at_calibration
        .table
        .clone()
        .expect("calibrated arm keeps its table");
    let drift = cfg.drift_config(seed);
    let mut state = new_state(cfg, profile.clone(), seed)?;
    let plan = plan(cfg, Mode::PudTune, frac)?;
    let mut outcomes = Vec::with_capacity(conditions.len());
    for (i, c) in conditions.iter().enumerate() {
        let drifted = drift_profile(&profile, &drift, c.temperature, c.days)?;
        state.set_profile(drifted)?;
        let k = if fresh_noise { i as u64 + 1 } else { 0 };
        let m = measure(cfg, &mut state, &plan, Some(&table), seed, k)?;
        let newly = at_calibration
            .measurement
            .error_flags
            .iter()
            .zip(&m.error_flags)
            .filter(|(before, after)| !**before && **after)
            .count();
        outcomes.push(DriftOutcome {
            condition: *c,
            new_error_prone: newly as f64 / cfg.cols as f64,
            throughput: throughputs(cfg, &plan, m.error_free)?,
            measurement: m,
        });
    }
    Ok(DriftRun {
        at_calibration,
        conditions: outcomes,
    })
}
