//! Per-column sense-amplifier thresholds and their drift with temperature
//! and time.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::seed::{rng_for, STREAM_DRIFT, STREAM_PROFILE};
use crate::{Error, Result};

pub const TAU_MIN: f64 = 0.01;
pub const TAU_MAX: f64 = 0.99;

/// Sense threshold of every column, in V_DD units.
#[derive(Clone, Debug, PartialEq)]
pub struct SenseAmpProfile {
    tau: Vec<f64>,
}

impl SenseAmpProfile {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if tau.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::Config("sense thresholds must lie in (0, 1)".into()));
        }
        Ok(Self { tau })
    }

    /// Every column at exactly half V_DD.
    pub fn ideal(n_cols: usize) -> Self {
        Self::uniform(n_cols, 0.5)
    }

    pub fn uniform(n_cols: usize, tau: f64) -> Self {
        Self {
            tau: vec![tau.clamp(TAU_MIN, TAU_MAX); n_cols],
        }
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn set(&mut self, col: usize, tau: f64) -> Result<()> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Config("sense thresholds must lie in (0, 1)".into()));
        }
        let n = self.tau.len();
        let slot = self.tau.get_mut(col).ok_or(Error::LengthMismatch {
            expected: n,
            actual: col + 1,
        })?;
        *slot = tau;
        Ok(())
    }
}

/// `tau_c = clamp(0.5 + N(0, sigma_tau), 0.01, 0.99)`, independently per
/// column.
pub fn sample_profile(n_cols: usize, sigma_tau: f64, seed: u64) -> Result<SenseAmpProfile> {
    if !(sigma_tau >= 0.0) {
        return Err(Error::Config("sigma_tau must be non-negative".into()));
    }
    let mut rng = rng_for(seed, STREAM_PROFILE);
    let tau = (0..n_cols)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (0.5 + sigma_tau * z).clamp(TAU_MIN, TAU_MAX)
        })
        .collect();
    Ok(SenseAmpProfile { tau })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftConfig {
    /// Systematic threshold shift, V_DD per degree C.
    pub kappa_temp: f64,
    /// Random per-column shift std-dev per degree C of |T - t_cal|.
    pub sigma_temp: f64,
    /// Random per-column shift std-dev per day.
    pub sigma_time: f64,
    /// Temperature at which the calibration was taken, degrees C.
    pub t_cal: f64,
    pub seed: u64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            kappa_temp: 5e-5,
            sigma_temp: 5e-5,
            sigma_time: 1e-4,
            t_cal: 40.0,
            seed: 0,
        }
    }
}

impl DriftConfig {
    pub fn zero() -> Self {
        Self {
            kappa_temp: 0.0,
            sigma_temp: 0.0,
            sigma_time: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_temp >= 0.0 && self.sigma_time >= 0.0) {
            return Err(Error::Config(
                "drift standard deviations must be non-negative".into(),
            ));
        }
        if !self.kappa_temp.is_finite() || !self.t_cal.is_finite() {
            return Err(Error::Config("drift parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Thresholds at `temperature` after `elapsed_days`:
///
/// `tau' = clamp(tau + kappa*dT + N(0, sigma_temp*|dT|) + N(0, sigma_time*days))`
///
/// The standard-normal draws behind the two random terms are a fixed
/// per-column property keyed by `drift.seed`, so the same column drifts the
/// same way (scaled) across conditions. The input profile is not modified.
pub fn drift_profile(
    profile: &SenseAmpProfile,
    drift: &DriftConfig,
    temperature: f64,
    elapsed_days: f64,
) -> Result<SenseAmpProfile> {
    drift.validate()?;
    if !(elapsed_days >= 0.0) || !temperature.is_finite() {
        return Err(Error::Config(
            "drift condition must be finite with non-negative days".into(),
        ));
    }
    let dt = temperature - drift.t_cal;
    let shift = drift.kappa_temp * dt;
    let temp_sd = drift.sigma_temp * dt.abs();
    let time_sd = drift.sigma_time * elapsed_days;
    let mut rng = rng_for(drift.seed, STREAM_DRIFT);
    let tau = profile
        .tau
        .iter()
        .map(|&t| {
            let z_temp: f64 = rng.sample(StandardNormal);
            let z_time: f64 = rng.sample(StandardNormal);
            (t + shift + temp_sd * z_temp + time_sd * z_time).clamp(TAU_MIN, TAU_MAX)
        })
        .collect();
    Ok(SenseAmpProfile { tau })
}
