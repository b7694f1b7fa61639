//! Experiment configuration: a TOML file whose keys mirror the CLI flags.
//! Flags given on the command line override file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use pudtune_core::calibration::{BiasMode, CalibParams, SamplingScheme};
use pudtune_core::metrics::LatencyModel;
use pudtune_core::{CopySensing, DriftConfig, FracConfig, NoiseConfig, SubarrayGeometry};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub cols: usize,
    pub rows: usize,
    pub sigma_tau: f64,
    pub sigma_sense: f64,
    pub sigma_cell: f64,
    /// Calibrated arm's Frac counts.
    pub frac: [u8; 3],
    /// Baseline arm's Frac counts; only the first entry is used.
    pub baseline_frac: [u8; 3],
    /// Random inputs per ECR measurement.
    pub trials: usize,
    /// Seeds per multi-seed run, starting at `seed`.
    pub seeds: usize,
    pub copy_sensing: CopySensingName,
    pub out: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub calibration: CalibrationSection,
    pub latency: LatencySection,
    pub drift: DriftSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            cols: 8192,
            rows: 512,
            sigma_tau: 0.04,
            sigma_sense: 0.005,
            sigma_cell: 0.0,
            frac: [2, 1, 0],
            baseline_frac: [3, 0, 0],
            trials: 8192,
            seeds: 1,
            copy_sensing: CopySensingName::Nominal,
            out: None,
            table: None,
            calibration: CalibrationSection::default(),
            latency: LatencySection::default(),
            drift: DriftSection::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CopySensingName {
    /// Copies resolve against half V_DD.
    Nominal,
    /// Copies resolve against the column's own threshold.
    Column,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasModeName {
    Raw,
    Relative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingName {
    Complementary,
    Independent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub iterations: usize,
    pub samples: usize,
    pub bias_threshold: f64,
    pub bias_mode: BiasModeName,
    pub sampling: SamplingName,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let p = CalibParams::default();
        Self {
            iterations: p.n_iterations,
            samples: p.samples_per_iteration,
            bias_threshold: p.bias_threshold,
            bias_mode: BiasModeName::Raw,
            sampling: SamplingName::Complementary,
        }
    }
}

/// Primitive timings in nanoseconds and the parallelism they are scaled by.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencySection {
    pub t_write: f64,
    pub t_row_copy: f64,
    pub t_frac: f64,
    pub t_simra: f64,
    pub banks: u32,
    pub channels: u32,
    pub hw_cols: u64,
}

impl Default for LatencySection {
    fn default() -> Self {
        let m = LatencyModel::default();
        Self {
            t_write: m.t_write,
            t_row_copy: m.t_row_copy,
            t_frac: m.t_frac,
            t_simra: m.t_simra,
            banks: m.banks_parallel,
            channels: m.channels,
            hw_cols: m.cols_per_subarray_hw,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftSection {
    pub kappa_temp: f64,
    pub sigma_temp: f64,
    pub sigma_time: f64,
    pub t_cal: f64,
    /// Re-measure drifted arrays with a new noise and input stream.
    pub fresh_noise: bool,
}

impl Default for DriftSection {
    fn default() -> Self {
        let d = DriftConfig::default();
        Self {
            kappa_temp: d.kappa_temp,
            sigma_temp: d.sigma_temp,
            sigma_time: d.sigma_time,
            t_cal: d.t_cal,
            fresh_noise: true,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text)
            .with_context(|| format!("malformed config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.geometry().validate()?;
        self.noise(0).validate()?;
        self.frac_config()?;
        self.baseline_frac_config()?;
        self.calib_params(0).validate()?;
        self.latency_model().validate()?;
        self.drift_config(0).validate()?;
        if !(self.sigma_tau >= 0.0) {
            bail!("sigma_tau must be non-negative");
        }
        if self.trials == 0 || self.seeds == 0 {
            bail!("trials and seeds must be positive");
        }
        Ok(())
    }

    pub fn geometry(&self) -> SubarrayGeometry {
        SubarrayGeometry::new(self.rows, self.cols)
    }

    pub fn noise(&self, seed: u64) -> NoiseConfig {
        NoiseConfig {
            sigma_sense: self.sigma_sense,
            sigma_cell: self.sigma_cell,
            seed,
        }
    }

    pub fn frac_config(&self) -> anyhow::Result<FracConfig> {
        let [x, y, z] = self.frac;
        Ok(FracConfig::new(x, y, z)?)
    }

    pub fn baseline_frac_config(&self) -> anyhow::Result<FracConfig> {
        Ok(FracConfig::new(self.baseline_frac[0], 0, 0)?)
    }

    pub fn copy_sensing(&self) -> CopySensing {
        match self.copy_sensing {
            CopySensingName::Nominal => CopySensing::Nominal,
            CopySensingName::Column => CopySensing::ColumnThreshold,
        }
    }

    pub fn calib_params(&self, seed: u64) -> CalibParams {
        let c = &self.calibration;
        CalibParams {
            n_iterations: c.iterations,
            samples_per_iteration: c.samples,
            bias_threshold: c.bias_threshold,
            seed,
            bias_mode: match c.bias_mode {
                BiasModeName::Raw => BiasMode::RawProportion,
                BiasModeName::Relative => BiasMode::RelativeToTruth,
            },
            sampling: match c.sampling {
                SamplingName::Complementary => SamplingScheme::Complementary,
                SamplingName::Independent => SamplingScheme::Independent,
            },
        }
    }

    pub fn latency_model(&self) -> LatencyModel {
        let l = &self.latency;
        LatencyModel {
            t_write: l.t_write,
            t_row_copy: l.t_row_copy,
            t_frac: l.t_frac,
            t_simra: l.t_simra,
            banks_parallel: l.banks,
            channels: l.channels,
            cols_per_subarray_hw: l.hw_cols,
        }
    }

    pub fn drift_config(&self, seed: u64) -> DriftConfig {
        let d = &self.drift;
        DriftConfig {
            kappa_temp: d.kappa_temp,
            sigma_temp: d.sigma_temp,
            sigma_time: d.sigma_time,
            t_cal: d.t_cal,
            seed,
        }
    }

    /// The `seeds` consecutive seeds starting at `seed`.
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64)
            .map(|i| self.seed.wrapping_add(i))
            .collect()
    }
}
