//! Charge-level model of one DRAM subarray.
//!
//! All voltages and charges are normalized to V_DD, so a fully charged cell
//! holds `1.0`, an empty one `0.0` and the precharged bitline sits at
//! `v_precharge` (0.5 by default). Activating `k` cells on a bitline settles
//! it at the capacitance-weighted mean of the cells and the bitline:
//!
//! ```text
//! V = (c_cell * sum(v_i) + c_bitline * v_precharge) / (k * c_cell + c_bitline)
//! ```
//!
//! which the per-column sense amplifier then resolves against its own
//! threshold `tau_c` and drives every connected cell to full swing.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::variation::SenseAmpProfile;
use crate::{Error, Result};

/// The neutral (half-V_DD) charge level Frac contracts toward.
pub const NEUTRAL: f64 = 0.5;

pub const DEFAULT_FRAC_FACTOR: f64 = 0.5;

/// Sensing margins wider than this many noise standard deviations resolve
/// without drawing a noise sample (tail mass below 1e-18).
const NOISE_CUTOFF_SIGMAS: f64 = 9.0;

/// Analog value stored in one cell, always within `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct CellCharge(f64);

impl CellCharge {
    pub const ZERO: CellCharge = CellCharge(0.0);
    pub const ONE: CellCharge = CellCharge(1.0);
    pub const NEUTRAL: CellCharge = CellCharge(NEUTRAL);

    /// Clamps `value` into `[0, 1]`. NaN maps to the neutral level.
    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            return Self::NEUTRAL;
        }
        CellCharge(value.clamp(0.0, 1.0))
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Self::ONE
        } else {
            Self::ZERO
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<bool> for CellCharge {
    fn from(bit: bool) -> Self {
        Self::from_bit(bit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubarrayGeometry {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Cell capacitance, fF.
    pub c_cell: f64,
    /// Bitline capacitance, fF.
    pub c_bitline: f64,
    /// Precharge level of the bitline, V_DD units.
    pub v_precharge: f64,
}

impl Default for SubarrayGeometry {
    fn default() -> Self {
        Self {
            n_rows: 512,
            n_cols: 8192,
            c_cell: 30.0,
            c_bitline: 270.0,
            v_precharge: 0.5,
        }
    }
}

impl SubarrayGeometry {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::Config(
                "subarray needs at least one row and one column".into(),
            ));
        }
        if !(self.c_cell > 0.0) || !(self.c_bitline > 0.0) {
            return Err(Error::Config("capacitances must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.v_precharge) {
            return Err(Error::Config("v_precharge must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Commodity subarrays have 256 to 1,024 rows. Sizes outside that range
    /// are accepted; callers may want to warn.
    pub fn rows_in_typical_range(&self) -> bool {
        (256..=1024).contains(&self.n_rows)
    }

    /// Bitline voltage change caused by one unit of cell charge when `cells`
    /// cells share the bitline.
    pub fn coupling(&self, cells: usize) -> f64 {
        self.c_cell / (cells as f64 * self.c_cell + self.c_bitline)
    }

    fn settle(&self, charge_sum: f64, cells: usize) -> f64 {
        (self.c_cell * charge_sum + self.c_bitline * self.v_precharge)
            / (cells as f64 * self.c_cell + self.c_bitline)
    }
}

/// Bitline voltage after the given cells share charge with the precharged
/// bitline.
pub fn charge_share(cells: &[CellCharge], geometry: &SubarrayGeometry) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::Usage("charge sharing needs at least one cell"));
    }
    let sum: f64 = cells.iter().map(|c| c.value()).sum();
    Ok(geometry.settle(sum, cells.len()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    /// Std-dev of the Gaussian voltage noise added at each sensing event.
    pub sigma_sense: f64,
    /// Std-dev of the charge noise added to each freshly written cell.
    pub sigma_cell: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_sense: 0.005,
            sigma_cell: 0.0,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self {
            sigma_sense: 0.0,
            sigma_cell: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sense >= 0.0) || !(self.sigma_cell >= 0.0) {
            return Err(Error::Config(
                "noise standard deviations must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Resolves `voltage` against `tau`: `1` iff `voltage + eps > tau` with
/// `eps ~ N(0, sigma_sense)`. A tie resolves to `0`.
pub fn sense<R: Rng + ?Sized>(voltage: f64, tau: f64, noise: &NoiseConfig, rng: &mut R) -> bool {
    let eps = if noise.sigma_sense > 0.0 {
        noise.sigma_sense * rng.sample::<f64, _>(StandardNormal)
    } else {
        0.0
    };
    voltage + eps > tau
}

#[inline]
fn resolve(voltage: f64, tau: f64, sigma: f64, rng: &mut ChaCha8Rng) -> bool {
    let margin = voltage - tau;
    if sigma == 0.0 || margin.abs() > NOISE_CUTOFF_SIGMAS * sigma {
        return margin > 0.0;
    }
    margin + sigma * rng.sample::<f64, _>(StandardNormal) > 0.0
}

/// Which threshold a RowCopy resolves against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CopySensing {
    /// The column's own sense threshold. Copies of a `1` fail on columns
    /// whose threshold exceeds the single-cell read voltage.
    #[default]
    ColumnThreshold,
    /// The nominal half-V_DD threshold: single-row activations are treated
    /// as having full read margin, with only sensing noise applied.
    Nominal,
}

/// Issued-primitive tally. Host writes are counted separately from RowCopy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PrimitiveCounts {
    pub writes: u64,
    pub row_copies: u64,
    pub fracs: u64,
    pub simras: u64,
}

impl PrimitiveCounts {
    pub fn total(&self) -> u64 {
        self.writes + self.row_copies + self.fracs + self.simras
    }
}

impl Add for PrimitiveCounts {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for PrimitiveCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.writes += rhs.writes;
        self.row_copies += rhs.row_copies;
        self.fracs += rhs.fracs;
        self.simras += rhs.simras;
    }
}

/// State of one subarray: cell charges, its sense amplifiers and the noise
/// source. Every primitive leaves the subarray precharged.
#[derive(Clone, Debug)]
pub struct Subarray {
    geometry: SubarrayGeometry,
    cells: Vec<f64>,
    open_rows: Vec<usize>,
    profile: SenseAmpProfile,
    noise: NoiseConfig,
    frac_factor: f64,
    rng: ChaCha8Rng,
    counts: PrimitiveCounts,
    scratch: Vec<f64>,
}

impl Subarray {
    /// A subarray with every cell empty.
    pub fn new(
        geometry: SubarrayGeometry,
        profile: SenseAmpProfile,
        noise: NoiseConfig,
    ) -> Result<Self> {
        geometry.validate()?;
        noise.validate()?;
        if profile.len() != geometry.n_cols {
            return Err(Error::GeometryMismatch {
                expected: geometry.n_cols,
                found: profile.len(),
            });
        }
        Ok(Self {
            cells: vec![0.0; geometry.n_rows * geometry.n_cols],
            open_rows: Vec::new(),
            profile,
            rng: ChaCha8Rng::seed_from_u64(noise.seed),
            noise,
            frac_factor: DEFAULT_FRAC_FACTOR,
            counts: PrimitiveCounts::default(),
            scratch: vec![0.0; geometry.n_cols],
            geometry,
        })
    }

    /// Sets the per-Frac contraction factor `f`: each Frac maps a charge `v`
    /// to `0.5 + f * (v - 0.5)`.
    pub fn with_frac_factor(mut self, f: f64) -> Result<Self> {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(
                "frac contraction factor must lie in (0, 1)".into(),
            ));
        }
        self.frac_factor = f;
        Ok(self)
    }

    pub fn geometry(&self) -> &SubarrayGeometry {
        &self.geometry
    }

    pub fn n_rows(&self) -> usize {
        self.geometry.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.geometry.n_cols
    }

    pub fn profile(&self) -> &SenseAmpProfile {
        &self.profile
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn frac_factor(&self) -> f64 {
        self.frac_factor
    }

    /// Swaps in a new threshold profile (e.g. a drifted one).
    pub fn set_profile(&mut self, profile: SenseAmpProfile) -> Result<()> {
        if profile.len() != self.geometry.n_cols {
            return Err(Error::GeometryMismatch {
                expected: self.geometry.n_cols,
                found: profile.len(),
            });
        }
        self.profile = profile;
        Ok(())
    }

    /// Restarts the noise stream from `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.noise.seed = seed;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn is_precharged(&self) -> bool {
        self.open_rows.is_empty()
    }

    pub fn counts(&self) -> PrimitiveCounts {
        self.counts
    }

    pub fn reset_counts(&mut self) {
        self.counts = PrimitiveCounts::default();
    }

    fn check_row(&self, row: usize) -> Result<()> {
        if row >= self.geometry.n_rows {
            return Err(Error::RowOutOfRange {
                row,
                n_rows: self.geometry.n_rows,
            });
        }
        Ok(())
    }

    fn row_range(&self, row: usize) -> core::ops::Range<usize> {
        let n = self.geometry.n_cols;
        row * n..(row + 1) * n
    }

    pub fn cell(&self, row: usize, col: usize) -> CellCharge {
        CellCharge(self.cells[row * self.geometry.n_cols + col])
    }

    pub fn row_charges(&self, row: usize) -> Result<&[f64]> {
        self.check_row(row)?;
        Ok(&self.cells[self.row_range(row)])
    }

    /// Host-side readback of a full-swing row: a cell reads `1` when its
    /// charge is above neutral.
    pub fn row_bits(&self, row: usize) -> Result<Vec<bool>> {
        Ok(self
            .row_charges(row)?
            .iter()
            .map(|&v| v > NEUTRAL)
            .collect())
    }

    pub fn set_cell(&mut self, row: usize, col: usize, charge: CellCharge) -> Result<()> {
        self.check_row(row)?;
        if col >= self.geometry.n_cols {
            return Err(Error::LengthMismatch {
                expected: self.geometry.n_cols,
                actual: col + 1,
            });
        }
        self.cells[row * self.geometry.n_cols + col] = charge.value();
        Ok(())
    }

    /// Sets every cell of `row` to `charge` (no noise, not counted).
    pub fn fill_row(&mut self, row: usize, charge: CellCharge) -> Result<()> {
        self.check_row(row)?;
        let range = self.row_range(row);
        self.cells[range].fill(charge.value());
        Ok(())
    }

    /// Host write of one bit per column into `row`.
    pub fn write_row(&mut self, row: usize, bits: &[bool]) -> Result<()> {
        self.check_row(row)?;
        if bits.len() != self.geometry.n_cols {
            return Err(Error::LengthMismatch {
                expected: self.geometry.n_cols,
                actual: bits.len(),
            });
        }
        let range = self.row_range(row);
        let sigma = self.noise.sigma_cell;
        let cells = &mut self.cells[range];
        if sigma > 0.0 {
            for (cell, &bit) in cells.iter_mut().zip(bits) {
                let base = if bit { 1.0 } else { 0.0 };
                let z: f64 = self.rng.sample(StandardNormal);
                *cell = (base + sigma * z).clamp(0.0, 1.0);
            }
        } else {
            for (cell, &bit) in cells.iter_mut().zip(bits) {
                *cell = if bit { 1.0 } else { 0.0 };
            }
        }
        self.counts.writes += 1;
        Ok(())
    }

    /// Host write of the same bit into every column of `row`.
    pub fn write_const_row(&mut self, row: usize, bit: bool) -> Result<()> {
        self.check_row(row)?;
        let range = self.row_range(row);
        let base = if bit { 1.0 } else { 0.0 };
        let sigma = self.noise.sigma_cell;
        if sigma > 0.0 {
            for cell in &mut self.cells[range] {
                let z: f64 = self.rng.sample(StandardNormal);
                *cell = (base + sigma * z).clamp(0.0, 1.0);
            }
        } else {
            self.cells[range].fill(base);
        }
        self.counts.writes += 1;
        Ok(())
    }

    /// In-array copy of `src` into `dst`, resolved against each column's
    /// sense threshold.
    pub fn row_copy(&mut self, src: usize, dst: usize) -> Result<()> {
        self.row_copy_with(src, dst, CopySensing::ColumnThreshold)
    }

    /// In-array copy. The source charge is sensed through the sense
    /// amplifier and `dst` receives the full-swing result; `src` is left
    /// unchanged.
    pub fn row_copy_with(&mut self, src: usize, dst: usize, sensing: CopySensing) -> Result<()> {
        self.check_row(src)?;
        self.check_row(dst)?;
        if src == dst {
            return Err(Error::Usage("RowCopy source and destination must differ"));
        }
        let n = self.geometry.n_cols;
        let a = self.geometry.coupling(1);
        let b = self.geometry.c_bitline * self.geometry.v_precharge
            / (self.geometry.c_cell + self.geometry.c_bitline);
        let sigma = self.noise.sigma_sense;
        self.open_rows.push(src);
        for c in 0..n {
            let v = a * self.cells[src * n + c] + b;
            let tau = match sensing {
                CopySensing::ColumnThreshold => self.profile.tau()[c],
                CopySensing::Nominal => NEUTRAL,
            };
            let bit = resolve(v, tau, sigma, &mut self.rng);
            self.cells[dst * n + c] = if bit { 1.0 } else { 0.0 };
        }
        self.open_rows.clear();
        self.counts.row_copies += 1;
        Ok(())
    }

    /// One Frac: every cell of `row` contracts toward neutral by the frac
    /// factor.
    pub fn frac(&mut self, row: usize) -> Result<()> {
        self.check_row(row)?;
        let f = self.frac_factor;
        let range = self.row_range(row);
        for v in &mut self.cells[range] {
            *v = NEUTRAL + f * (*v - NEUTRAL);
        }
        self.counts.fracs += 1;
        Ok(())
    }

    pub fn frac_n(&mut self, row: usize, times: u32) -> Result<()> {
        for _ in 0..times {
            self.frac(row)?;
        }
        Ok(())
    }

    /// Bitline voltages `rows` would settle to if activated together,
    /// without sensing or disturbing the cells.
    pub fn probe_bitlines(&self, rows: &[usize]) -> Result<Vec<f64>> {
        if rows.is_empty() {
            return Err(Error::Usage("charge sharing needs at least one cell"));
        }
        for &r in rows {
            self.check_row(r)?;
        }
        let n = self.geometry.n_cols;
        Ok((0..n)
            .map(|c| {
                let sum: f64 = rows.iter().map(|&r| self.cells[r * n + c]).sum();
                self.geometry.settle(sum, rows.len())
            })
            .collect())
    }

    /// Simultaneous activation of `rows`. Each column's bitline settles to
    /// the charge-shared voltage, its sense amplifier resolves it, and every
    /// activated cell is restored to the resolved value. Returns the result
    /// bit per column.
    pub fn simra(&mut self, rows: &[usize]) -> Result<Vec<bool>> {
        if rows.len() < 2 {
            return Err(Error::Usage("SiMRA needs at least two rows"));
        }
        for (i, &r) in rows.iter().enumerate() {
            self.check_row(r)?;
            if rows[..i].contains(&r) {
                return Err(Error::Usage("SiMRA rows must be distinct"));
            }
        }
        let n = self.geometry.n_cols;
        self.open_rows.extend_from_slice(rows);

        self.scratch.clear();
        self.scratch.resize(n, 0.0);
        for &r in rows {
            for (s, v) in self.scratch.iter_mut().zip(&self.cells[r * n..(r + 1) * n]) {
                *s += *v;
            }
        }

        let sigma = self.noise.sigma_sense;
        let tau = self.profile.tau();
        let geometry = self.geometry;
        let mut out = Vec::with_capacity(n);
        for (c, &sum) in self.scratch.iter().enumerate() {
            let v = geometry.settle(sum, rows.len());
            out.push(resolve(v, tau[c], sigma, &mut self.rng));
        }

        for &r in rows {
            for (cell, &bit) in self.cells[r * n..(r + 1) * n].iter_mut().zip(&out) {
                *cell = if bit { 1.0 } else { 0.0 };
            }
        }
        self.open_rows.clear();
        self.counts.simras += 1;
        Ok(out)
    }
}
