//! Error-prone column measurement and the throughput model.
//!
//! Throughput follows
//!
//! `ops/s = error_free_columns * banks * channels * (hw_cols / sim_cols) / latency`
//!
//! where `latency` sums each issued primitive's timing. The simulated
//! subarray is scaled to hardware width with its error-free fraction applied
//! uniformly, so the figure is an extrapolation.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::calibration::{run_trials, CalibrationTable, SamplingScheme};
use crate::exec::{store_calibration, MajPlan, Mode};
use crate::subarray::{PrimitiveCounts, Subarray};
use crate::{Error, Result};

/// Default per-primitive timing in nanoseconds. Chosen so that a twelve
/// primitive MAJ5 on 53.4% error-free columns yields 0.89 TOPS.
pub const DEFAULT_T_PRIM_NS: f64 = 210.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyModel {
    pub t_write: f64,
    pub t_row_copy: f64,
    pub t_frac: f64,
    pub t_simra: f64,
    pub banks_parallel: u32,
    pub channels: u32,
    pub cols_per_subarray_hw: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            t_write: DEFAULT_T_PRIM_NS,
            t_row_copy: DEFAULT_T_PRIM_NS,
            t_frac: DEFAULT_T_PRIM_NS,
            t_simra: DEFAULT_T_PRIM_NS,
            banks_parallel: 16,
            channels: 4,
            cols_per_subarray_hw: 65_536,
        }
    }
}

impl LatencyModel {
    pub fn validate(&self) -> Result<()> {
        let times = [self.t_write, self.t_row_copy, self.t_frac, self.t_simra];
        if times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Config("primitive latencies must be positive".into()));
        }
        if self.banks_parallel == 0 || self.channels == 0 || self.cols_per_subarray_hw == 0 {
            return Err(Error::Config(
                "parallelism and hardware width must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Time for one operation issuing `counts`, in nanoseconds.
    pub fn latency_ns(&self, counts: &PrimitiveCounts) -> f64 {
        counts.writes as f64 * self.t_write
            + counts.row_copies as f64 * self.t_row_copy
            + counts.fracs as f64 * self.t_frac
            + counts.simras as f64 * self.t_simra
    }

    /// Every primitive timing multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            t_write: self.t_write * k,
            t_row_copy: self.t_row_copy * k,
            t_frac: self.t_frac * k,
            t_simra: self.t_simra * k,
            ..*self
        }
    }
}

/// Operations per second across the modeled channels and banks.
pub fn throughput(
    error_free_columns: usize,
    n_cols_simulated: usize,
    cost: &PrimitiveCounts,
    model: &LatencyModel,
) -> Result<f64> {
    model.validate()?;
    if n_cols_simulated == 0 || error_free_columns > n_cols_simulated {
        return Err(Error::Config(
            "error-free columns must lie within the simulated width".into(),
        ));
    }
    let latency = model.latency_ns(cost);
    if !(latency > 0.0) {
        return Err(Error::Usage("operation issues no primitives"));
    }
    let scale = model.cols_per_subarray_hw as f64 / n_cols_simulated as f64;
    let parallel = f64::from(model.banks_parallel) * f64::from(model.channels);
    Ok(error_free_columns as f64 * scale * parallel / (latency * 1e-9))
}

/// Fraction of rows set aside for calibration storage.
pub fn capacity_overhead(reserved_rows: usize, n_rows: usize) -> f64 {
    reserved_rows as f64 / n_rows as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct EcrMeasurement {
    /// Fraction of columns with at least one wrong output.
    pub ecr: f64,
    pub error_flags: Vec<bool>,
    pub error_free: usize,
    pub n_trials: usize,
}

impl EcrMeasurement {
    pub fn n_cols(&self) -> usize {
        self.error_flags.len()
    }
}

/// Runs `n_trials` MAJ-X operations with uniformly random inputs and flags
/// every column that disagrees with the majority at least once. In
/// calibrated mode the table is stored into the reserved rows first.
pub fn measure_ecr<R: Rng + ?Sized>(
    state: &mut Subarray,
    plan: &MajPlan,
    table: Option<&CalibrationTable>,
    n_trials: usize,
    rng: &mut R,
) -> Result<EcrMeasurement> {
    if n_trials == 0 {
        return Err(Error::Config("ECR needs at least one trial".into()));
    }
    if plan.mode == Mode::PudTune {
        let t = table.ok_or(Error::MissingCalibration)?;
        store_calibration(state, plan, t)?;
    }
    let mut flags = vec![false; state.n_cols()];
    run_trials(
        state,
        plan,
        table,
        n_trials,
        SamplingScheme::Independent,
        rng,
        |out, truth| {
            for ((f, o), t) in flags.iter_mut().zip(out).zip(truth) {
                *f |= o != t;
            }
        },
    )?;
    let prone = flags.iter().filter(|&&f| f).count();
    Ok(EcrMeasurement {
        ecr: prone as f64 / flags.len() as f64,
        error_free: flags.len() - prone,
        error_flags: flags,
        n_trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::FracConfig;
    use crate::subarray::{NoiseConfig, SubarrayGeometry};
    use crate::variation::SenseAmpProfile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn maj5_cost() -> PrimitiveCounts {
        PrimitiveCounts {
            writes: 0,
            row_copies: 8,
            fracs: 3,
            simras: 1,
        }
    }

    #[test]
    fn fitted_latency_reproduces_anchor() {
        let m = LatencyModel::default();
        let ef = (0.534 * 8192.0) as usize;
        let t = throughput(ef, 8192, &maj5_cost(), &m).unwrap();
        let expected = ef as f64 * 8.0 * 64.0 / (12.0 * 210e-9);
        assert!((t - expected).abs() / expected < 1e-12);
        assert!((t / 1e12 - 0.89).abs() < 0.005, "{t}");
    }

    #[test]
    fn doubling_latency_halves_throughput() {
        let m = LatencyModel::default();
        let a = throughput(1000, 8192, &maj5_cost(), &m).unwrap();
        let b = throughput(1000, 8192, &maj5_cost(), &m.scaled(2.0)).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_costs_give_error_free_ratio() {
        let m = LatencyModel::default();
        let a = throughput(7922, 8192, &maj5_cost(), &m).unwrap();
        let b = throughput(4374, 8192, &maj5_cost(), &m).unwrap();
        assert!((a / b - 7922.0 / 4374.0).abs() < 1e-9);
    }

    #[test]
    fn throughput_rejects_bad_inputs() {
        let m = LatencyModel::default();
        assert!(throughput(10, 5, &maj5_cost(), &m).is_err());
        assert!(throughput(1, 5, &PrimitiveCounts::default(), &m).is_err());
        let bad = LatencyModel { t_frac: 0.0, ..m };
        assert!(throughput(1, 5, &maj5_cost(), &bad).is_err());
        assert_eq!(throughput(0, 5, &maj5_cost(), &m).unwrap(), 0.0);
    }

    #[test]
    fn overhead_of_three_rows() {
        let o = capacity_overhead(3, 512);
        assert!((o - 0.005859375).abs() < 1e-15);
    }

    fn setup(profile: SenseAmpProfile, mode: Mode) -> (Subarray, MajPlan) {
        let g = SubarrayGeometry::new(32, profile.len());
        let s = Subarray::new(g, profile, NoiseConfig::noiseless()).unwrap();
        let plan = MajPlan::new(&g, 5, mode, FracConfig::new(2, 1, 0).unwrap()).unwrap();
        (s, plan)
    }

    #[test]
    fn ideal_columns_have_no_errors() {
        let (mut s, plan) = setup(SenseAmpProfile::ideal(64), Mode::PudTune);
        let t = CalibrationTable::mid_level(plan.frac_config, 0.5, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = measure_ecr(&mut s, &plan, Some(&t), 256, &mut rng).unwrap();
        assert_eq!(m.ecr, 0.0);
        assert_eq!(m.error_free, 64);
    }

    #[test]
    fn one_uncorrectable_column_in_a_hundred() {
        let mut profile = SenseAmpProfile::ideal(100);
        profile.set(17, 0.65).unwrap();
        let (mut s, plan) = setup(profile, Mode::PudTune);
        let mut t = CalibrationTable::mid_level(plan.frac_config, 0.5, 100).unwrap();
        // Even the strongest positive offset cannot reach tau = 0.65.
        t.set_level(17, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = measure_ecr(&mut s, &plan, Some(&t), 512, &mut rng).unwrap();
        assert_eq!(m.ecr, 0.01);
        assert!(m.error_flags[17]);
    }

    #[test]
    fn baseline_ignores_table() {
        let profile = crate::variation::sample_profile(256, 0.04, 5).unwrap();
        let (mut s, plan) = setup(profile.clone(), Mode::Baseline);
        let plan = MajPlan {
            frac_config: FracConfig::new(3, 0, 0).unwrap(),
            ..plan
        };
        let t = CalibrationTable::mid_level(FracConfig::new(2, 1, 0).unwrap(), 0.5, 256).unwrap();
        let a = measure_ecr(&mut s, &plan, None, 256, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let (mut s2, _) = setup(profile, Mode::Baseline);
        let b = measure_ecr(
            &mut s2,
            &plan,
            Some(&t),
            256,
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn calibrated_mode_requires_table() {
        let (mut s, plan) = setup(SenseAmpProfile::ideal(8), Mode::PudTune);
        let r = measure_ecr(&mut s, &plan, None, 8, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r, Err(Error::MissingCalibration));
    }
}
