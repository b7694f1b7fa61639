//! Calibration data identification.
//!
//! Every column starts at the ladder level nearest zero offset. Each
//! iteration stores the current patterns in the reserved rows, samples
//! MAJ-X on random inputs, and nudges each column one level against its
//! output bias: a column that reads `1` too often has an effectively low
//! threshold and moves toward more negative offsets, and vice versa.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::exec::{exec_maj, majority, store_calibration, MajPlan, Mode};
use crate::ladder::{CalibPattern, FracConfig, OffsetLadder};
use crate::seed::{rng_for, STREAM_CALIB_INPUTS};
use crate::subarray::Subarray;
use crate::{Error, Result};

/// Per-column ladder levels together with the patterns they select.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationTable {
    ladder: OffsetLadder,
    levels: Vec<usize>,
    patterns: Vec<CalibPattern>,
}

impl CalibrationTable {
    pub fn from_levels(
        frac_config: FracConfig,
        contraction_f: f64,
        levels: Vec<usize>,
    ) -> Result<Self> {
        let ladder = OffsetLadder::enumerate(frac_config, contraction_f)?;
        if let Some(&bad) = levels.iter().find(|&&l| l >= ladder.len()) {
            return Err(Error::Config(alloc::format!(
                "level {bad} outside a ladder of {} levels",
                ladder.len()
            )));
        }
        let patterns = levels
            .iter()
            .map(|&l| ladder.entries()[l].pattern)
            .collect();
        Ok(Self {
            ladder,
            levels,
            patterns,
        })
    }

    /// Every column at the ladder's nearest-zero level.
    pub fn mid_level(frac_config: FracConfig, contraction_f: f64, n_cols: usize) -> Result<Self> {
        let ladder = OffsetLadder::enumerate(frac_config, contraction_f)?;
        let mid = ladder.mid_level();
        Self::from_levels(frac_config, contraction_f, vec![mid; n_cols])
    }

    pub fn frac_config(&self) -> FracConfig {
        self.ladder.frac_config()
    }

    pub fn contraction_f(&self) -> f64 {
        self.ladder.contraction_f()
    }

    pub fn ladder(&self) -> &OffsetLadder {
        &self.ladder
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn patterns(&self) -> &[CalibPattern] {
        &self.patterns
    }

    pub fn n_cols(&self) -> usize {
        self.levels.len()
    }

    pub fn offset(&self, col: usize) -> f64 {
        self.ladder.entries()[self.levels[col]].offset
    }

    pub fn set_level(&mut self, col: usize, level: usize) -> Result<()> {
        let entry = self.ladder.get(level).ok_or_else(|| {
            Error::Config(alloc::format!(
                "level {level} outside a ladder of {} levels",
                self.ladder.len()
            ))
        })?;
        self.patterns[col] = entry.pattern;
        self.levels[col] = level;
        Ok(())
    }

    /// Every pattern matches its level's ladder entry.
    pub fn is_consistent(&self) -> bool {
        self.levels.len() == self.patterns.len()
            && self
                .levels
                .iter()
                .zip(&self.patterns)
                .all(|(&l, &p)| self.ladder.get(l).map(|e| e.pattern) == Some(p))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BiasMode {
    /// Fraction of `1` outputs minus one half.
    #[default]
    RawProportion,
    /// Fraction of `1` outputs minus the fraction of `1` in the ground truth.
    RelativeToTruth,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplingScheme {
    /// Odd trials reuse the preceding trial's inputs complemented. Each
    /// trial is still uniform, and the ground truth is exactly balanced per
    /// column, so an error-free column shows zero raw bias.
    #[default]
    Complementary,
    /// Every trial draws fresh inputs.
    Independent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibParams {
    pub n_iterations: usize,
    pub samples_per_iteration: usize,
    pub bias_threshold: f64,
    pub seed: u64,
    pub bias_mode: BiasMode,
    pub sampling: SamplingScheme,
}

impl Default for CalibParams {
    fn default() -> Self {
        Self {
            n_iterations: 20,
            samples_per_iteration: 512,
            bias_threshold: 0.05,
            seed: 0,
            bias_mode: BiasMode::default(),
            sampling: SamplingScheme::default(),
        }
    }
}

impl CalibParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_iterations == 0 || self.samples_per_iteration == 0 {
            return Err(Error::Config(
                "calibration needs at least one iteration and one sample".into(),
            ));
        }
        if !(self.bias_threshold > 0.0 && self.bias_threshold < 0.5) {
            return Err(Error::Config("bias threshold must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

/// Signed share of `1` outputs: `ones / n - 0.5`.
pub fn get_bias(outputs: &[bool]) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::Usage("bias of an empty trial set"));
    }
    let ones = outputs.iter().filter(|&&b| b).count();
    Ok(ones as f64 / outputs.len() as f64 - 0.5)
}

/// Fills `rows` with uniform random bits.
pub(crate) fn fill_random<R: RngCore + ?Sized>(rng: &mut R, rows: &mut [Vec<bool>]) {
    for row in rows {
        let mut word = 0u64;
        for (i, bit) in row.iter_mut().enumerate() {
            if i % 64 == 0 {
                word = rng.next_u64();
            }
            *bit = word & 1 == 1;
            word >>= 1;
        }
    }
}

/// Runs `n_samples` MAJ-X trials with random inputs and hands each trial's
/// outputs and ground truth to `visit`.
pub(crate) fn run_trials<R, F>(
    state: &mut Subarray,
    plan: &MajPlan,
    table: Option<&CalibrationTable>,
    n_samples: usize,
    scheme: SamplingScheme,
    rng: &mut R,
    mut visit: F,
) -> Result<()>
where
    R: Rng + ?Sized,
    F: FnMut(&[bool], &[bool]),
{
    let n = state.n_cols();
    let mut inputs = vec![vec![false; n]; plan.inputs];
    let mut truth = vec![false; n];
    let mut column = [false; 5];
    for trial in 0..n_samples {
        match scheme {
            SamplingScheme::Complementary if trial % 2 == 1 => {
                for row in &mut inputs {
                    for b in row.iter_mut() {
                        *b = !*b;
                    }
                }
            }
            _ => fill_random(rng, &mut inputs),
        }
        for (c, t) in truth.iter_mut().enumerate() {
            for (i, row) in inputs.iter().enumerate() {
                column[i] = row[c];
            }
            *t = majority(&column[..plan.inputs]);
        }
        let out = exec_maj(state, plan, &inputs, table)?;
        visit(&out, &truth);
    }
    Ok(())
}

/// Trial outputs and the matching ground truth, one row per trial.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub outputs: Vec<Vec<bool>>,
    pub truth: Vec<Vec<bool>>,
}

impl SampleSet {
    pub fn n_samples(&self) -> usize {
        self.outputs.len()
    }

    /// Trial outputs of one column.
    pub fn column(&self, col: usize) -> Vec<bool> {
        self.outputs.iter().map(|row| row[col]).collect()
    }

    pub fn truth_column(&self, col: usize) -> Vec<bool> {
        self.truth.iter().map(|row| row[col]).collect()
    }

    /// Whether each column disagreed with the ground truth at least once.
    pub fn error_flags(&self) -> Vec<bool> {
        let n = self.outputs.first().map_or(0, Vec::len);
        let mut flags = vec![false; n];
        for (out, truth) in self.outputs.iter().zip(&self.truth) {
            for ((f, o), t) in flags.iter_mut().zip(out).zip(truth) {
                *f |= o != t;
            }
        }
        flags
    }
}

/// `n_samples` MAJ-X trials with fresh random inputs in every column.
/// In calibrated mode the table must already be stored (see
/// [`store_calibration`]).
pub fn majx_sampling<R: Rng + ?Sized>(
    state: &mut Subarray,
    plan: &MajPlan,
    table: Option<&CalibrationTable>,
    n_samples: usize,
    scheme: SamplingScheme,
    rng: &mut R,
) -> Result<SampleSet> {
    let mut set = SampleSet {
        outputs: Vec::with_capacity(n_samples),
        truth: Vec::with_capacity(n_samples),
    };
    run_trials(state, plan, table, n_samples, scheme, rng, |out, truth| {
        set.outputs.push(out.to_vec());
        set.truth.push(truth.to_vec());
    })?;
    Ok(set)
}

/// Calibrates every column of `state` for `plan`, starting from the
/// mid-level table.
pub fn calibrate(
    state: &mut Subarray,
    plan: &MajPlan,
    params: &CalibParams,
) -> Result<CalibrationTable> {
    calibrate_with(state, plan, params, None, |_, _| {})
}

/// Like [`calibrate`], starting from `initial` when given and reporting the
/// table after every iteration to `observe`.
pub fn calibrate_with<F>(
    state: &mut Subarray,
    plan: &MajPlan,
    params: &CalibParams,
    initial: Option<CalibrationTable>,
    mut observe: F,
) -> Result<CalibrationTable>
where
    F: FnMut(usize, &CalibrationTable),
{
    params.validate()?;
    if plan.mode != Mode::PudTune {
        return Err(Error::Config(
            "calibration requires a calibrated-mode plan".into(),
        ));
    }
    let mut table = match initial {
        Some(t) => t,
        None => CalibrationTable::mid_level(plan.frac_config, state.frac_factor(), state.n_cols())?,
    };
    let top = table.ladder().len();
    if top < 2 {
        return Err(Error::Config(
            "calibration needs a ladder with at least two levels".into(),
        ));
    }
    let top = top - 1;

    let mut rng = rng_for(params.seed, STREAM_CALIB_INPUTS);
    let n = state.n_cols();
    let mut ones = vec![0u32; n];
    let mut truth_ones = vec![0u32; n];
    for iteration in 0..params.n_iterations {
        store_calibration(state, plan, &table)?;
        ones.fill(0);
        truth_ones.fill(0);
        run_trials(
            state,
            plan,
            Some(&table),
            params.samples_per_iteration,
            params.sampling,
            &mut rng,
            |out, truth| {
                for ((o, t), (&ob, &tb)) in ones
                    .iter_mut()
                    .zip(truth_ones.iter_mut())
                    .zip(out.iter().zip(truth))
                {
                    *o += ob as u32;
                    *t += tb as u32;
                }
            },
        )?;
        let samples = params.samples_per_iteration as f64;
        for c in 0..n {
            let reference = match params.bias_mode {
                BiasMode::RawProportion => 0.5,
                BiasMode::RelativeToTruth => f64::from(truth_ones[c]) / samples,
            };
            let bias = f64::from(ones[c]) / samples - reference;
            let level = table.levels()[c];
            if bias > params.bias_threshold && level > 0 {
                table.set_level(c, level - 1)?;
            } else if bias < -params.bias_threshold && level < top {
                table.set_level(c, level + 1)?;
            }
        }
        observe(iteration, &table);
    }
    store_calibration(state, plan, &table)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subarray::{NoiseConfig, SubarrayGeometry};
    use crate::variation::SenseAmpProfile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg210() -> FracConfig {
        FracConfig::new(2, 1, 0).unwrap()
    }

    fn setup(profile: SenseAmpProfile, noise: NoiseConfig) -> (Subarray, MajPlan) {
        let g = SubarrayGeometry::new(32, profile.len());
        let s = Subarray::new(g, profile, noise).unwrap();
        let plan = MajPlan::new(&g, 5, Mode::PudTune, cfg210()).unwrap();
        (s, plan)
    }

    /// Exhaustive oracle: does this column answer all 32 MAJ5 inputs
    /// correctly with the given level? Evaluated from the closed-form
    /// bitline voltage, independently of the executor.
    fn level_error_free(tau: f64, offset: f64) -> bool {
        (0u32..32).all(|inputs| {
            let ones = inputs.count_ones() as f64;
            let v = (30.0 * (ones + 1.5 + offset) + 135.0) / 510.0;
            (v > tau) == (ones >= 3.0)
        })
    }

    #[test]
    fn bias_examples() {
        assert_eq!(get_bias(&[true; 8]).unwrap(), 0.5);
        assert_eq!(get_bias(&[true, false, true, false]).unwrap(), 0.0);
        let mut v = vec![false; 512];
        v[..300].fill(true);
        assert_eq!(get_bias(&v).unwrap(), 0.0859375);
        assert!(get_bias(&[]).is_err());
    }

    #[test]
    fn table_consistency_and_levels() {
        let mut t = CalibrationTable::mid_level(cfg210(), 0.5, 4).unwrap();
        assert_eq!(t.levels(), &[3, 3, 3, 3]);
        assert!(t.is_consistent());
        t.set_level(2, 7).unwrap();
        assert_eq!(t.offset(2), 0.875);
        assert!(t.is_consistent());
        assert!(t.set_level(0, 8).is_err());
        assert!(CalibrationTable::from_levels(cfg210(), 0.5, vec![0, 8]).is_err());
    }

    #[test]
    fn sampling_on_ideal_columns_matches_truth() {
        let (mut s, plan) = setup(SenseAmpProfile::ideal(64), NoiseConfig::noiseless());
        let t = CalibrationTable::mid_level(cfg210(), 0.5, 64).unwrap();
        store_calibration(&mut s, &plan, &t).unwrap();
        for scheme in [SamplingScheme::Complementary, SamplingScheme::Independent] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let set = majx_sampling(&mut s, &plan, Some(&t), 40, scheme, &mut rng).unwrap();
            assert_eq!(set.outputs, set.truth);
            assert!(set.error_flags().iter().all(|f| !f));
        }
    }

    #[test]
    fn sampled_truth_is_balanced() {
        let n = 4096;
        let (mut s, plan) = setup(SenseAmpProfile::ideal(n), NoiseConfig::noiseless());
        let t = CalibrationTable::mid_level(cfg210(), 0.5, n).unwrap();
        store_calibration(&mut s, &plan, &t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let set = majx_sampling(
            &mut s,
            &plan,
            Some(&t),
            512,
            SamplingScheme::Independent,
            &mut rng,
        )
        .unwrap();
        let within = (0..n)
            .filter(|&c| (get_bias(&set.truth_column(c)).unwrap()).abs() <= 0.12)
            .count();
        assert!(within as f64 >= 0.999 * n as f64);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let set = majx_sampling(
            &mut s,
            &plan,
            Some(&t),
            512,
            SamplingScheme::Complementary,
            &mut rng,
        )
        .unwrap();
        assert!((0..n).all(|c| get_bias(&set.truth_column(c)).unwrap() == 0.0));
    }

    #[test]
    fn sampling_is_seeded() {
        let profile = crate::variation::sample_profile(128, 0.04, 1).unwrap();
        let noise = NoiseConfig::default().with_seed(9);
        let run = || {
            let (mut s, plan) = setup(profile.clone(), noise);
            let t = CalibrationTable::mid_level(cfg210(), 0.5, 128).unwrap();
            store_calibration(&mut s, &plan, &t).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            majx_sampling(
                &mut s,
                &plan,
                Some(&t),
                16,
                SamplingScheme::Independent,
                &mut rng,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn ideal_columns_never_move() {
        let (mut s, plan) = setup(SenseAmpProfile::ideal(256), NoiseConfig::noiseless());
        let t = calibrate(&mut s, &plan, &CalibParams::default()).unwrap();
        assert!(t.levels().iter().all(|&l| l == 3));
    }

    #[test]
    fn high_threshold_converges_into_zero_error_set() {
        let (mut s, plan) = setup(SenseAmpProfile::uniform(1, 0.55), NoiseConfig::noiseless());
        let t = calibrate(&mut s, &plan, &CalibParams::default()).unwrap();
        let ladder = t.ladder();
        let zero_error: Vec<f64> = ladder
            .offsets()
            .into_iter()
            .filter(|&o| level_error_free(0.55, o))
            .collect();
        // Brute force says the error-free levels for tau = 0.55 are these.
        assert_eq!(zero_error, vec![0.375, 0.625, 0.875]);
        assert!(zero_error.contains(&t.offset(0)));
    }

    #[test]
    fn uncorrectable_threshold_saturates() {
        let (mut s, plan) = setup(SenseAmpProfile::uniform(1, 0.65), NoiseConfig::noiseless());
        let t = calibrate(&mut s, &plan, &CalibParams::default()).unwrap();
        assert_eq!(t.levels()[0], 7);
        assert!(!level_error_free(0.65, t.offset(0)));

        let (mut s, plan) = setup(SenseAmpProfile::uniform(1, 0.35), NoiseConfig::noiseless());
        let t = calibrate(&mut s, &plan, &CalibParams::default()).unwrap();
        assert_eq!(t.levels()[0], 0);
    }

    #[test]
    fn levels_move_at_most_one_step_per_iteration() {
        let profile = crate::variation::sample_profile(512, 0.05, 2).unwrap();
        let (mut s, plan) = setup(profile, NoiseConfig::default().with_seed(1));
        let params = CalibParams {
            samples_per_iteration: 64,
            ..CalibParams::default()
        };
        let mut prev = CalibrationTable::mid_level(cfg210(), 0.5, 512)
            .unwrap()
            .levels()
            .to_vec();
        let mut iterations = 0;
        calibrate_with(&mut s, &plan, &params, None, |_, t| {
            assert!(t.is_consistent());
            for (a, b) in prev.iter().zip(t.levels()) {
                assert!(a.abs_diff(*b) <= 1);
                assert!(*b < 8);
            }
            prev = t.levels().to_vec();
            iterations += 1;
        })
        .unwrap();
        assert_eq!(iterations, 20);
    }

    #[test]
    fn rejects_bad_configuration() {
        let (mut s, plan) = setup(SenseAmpProfile::ideal(4), NoiseConfig::noiseless());
        let bad = CalibParams {
            bias_threshold: 0.5,
            ..CalibParams::default()
        };
        assert!(calibrate(&mut s, &plan, &bad).is_err());
        let baseline = MajPlan {
            mode: Mode::Baseline,
            ..plan.clone()
        };
        assert!(calibrate(&mut s, &baseline, &CalibParams::default()).is_err());
    }

    #[test]
    fn calibration_is_seeded() {
        let profile = crate::variation::sample_profile(256, 0.04, 3).unwrap();
        let run = |seed| {
            let (mut s, plan) = setup(profile.clone(), NoiseConfig::default().with_seed(2));
            let params = CalibParams {
                seed,
                samples_per_iteration: 64,
                ..CalibParams::default()
            };
            calibrate(&mut s, &plan, &params).unwrap()
        };
        assert_eq!(run(1), run(1));
    }
}
