//! Calibration offset ladders.
//!
//! Three calibration rows sit among the eight rows opened by SiMRA. Row `j`
//! is loaded with a bit `b_j` and then contracted `k_j` times by Frac, so it
//! contributes a charge deviation of `(b_j - 0.5) * f^k_j` from neutral.
//! A ladder lists every distinct total deviation reachable with the eight
//! possible bit patterns, in ascending order. Offsets stay in cell-charge
//! units; [`correctable_range`] converts them to bitline volts.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::subarray::SubarrayGeometry;
use crate::{Error, Result};

/// Beyond this many Fracs a row is indistinguishable from neutral.
pub const MAX_FRAC: u8 = 10;

const MERGE_EPS: f64 = 1e-9;

/// Frac repetitions applied to calibration rows 1..3, the `(x, y, z)` of a
/// `T_{x,y,z}` configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FracConfig {
    counts: [u8; 3],
}

impl FracConfig {
    pub fn new(x: u8, y: u8, z: u8) -> Result<Self> {
        if x > MAX_FRAC || y > MAX_FRAC || z > MAX_FRAC {
            return Err(Error::Config(alloc::format!(
                "frac counts ({x},{y},{z}) exceed the maximum of {MAX_FRAC}"
            )));
        }
        Ok(Self { counts: [x, y, z] })
    }

    pub fn counts(&self) -> [u8; 3] {
        self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

impl fmt::Display for FracConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = self.counts;
        write!(f, "{x},{y},{z}")
    }
}

impl FromStr for FracConfig {
    type Err = Error;

    /// Parses `"x,y,z"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(',').map(|p| p.trim().parse::<u8>());
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(Ok(x)), Some(Ok(y)), Some(Ok(z)), None) => Self::new(x, y, z),
            _ => Err(Error::Config(alloc::format!(
                "expected frac counts as x,y,z, got {s:?}"
            ))),
        }
    }
}

/// Bits stored in the three calibration rows of one column; bit `j` belongs
/// to calibration row `j`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CalibPattern(u8);

impl CalibPattern {
    pub fn new(bits: u8) -> Self {
        CalibPattern(bits & 0b111)
    }

    pub fn from_bits(bits: [bool; 3]) -> Self {
        CalibPattern(bits[0] as u8 | (bits[1] as u8) << 1 | (bits[2] as u8) << 2)
    }

    pub fn bit(self, row: usize) -> bool {
        self.0 >> row & 1 == 1
    }

    pub fn bits(self) -> [bool; 3] {
        [self.bit(0), self.bit(1), self.bit(2)]
    }

    pub fn complement(self) -> Self {
        CalibPattern(!self.0 & 0b111)
    }

    pub fn raw(self) -> u8 {
        self.0
    }

    /// Net charge deviation from neutral of the three rows after the
    /// configured Fracs.
    pub fn offset(self, frac: &FracConfig, f: f64) -> f64 {
        (0..3)
            .map(|j| {
                let sign = if self.bit(j) { 0.5 } else { -0.5 };
                sign * libm::pow(f, f64::from(frac.counts[j]))
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderEntry {
    pub pattern: CalibPattern,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OffsetLadder {
    frac_config: FracConfig,
    contraction_f: f64,
    entries: Vec<LadderEntry>,
}

impl OffsetLadder {
    /// Evaluates all eight patterns, merges offsets closer than 1e-9 and
    /// sorts ascending. A negative-offset level keeps its lowest-numbered
    /// pattern; its mirror level keeps the complement of that pattern.
    pub fn enumerate(frac_config: FracConfig, f: f64) -> Result<Self> {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(
                "frac contraction factor must lie in (0, 1)".into(),
            ));
        }
        let mut all: Vec<LadderEntry> = (0..8u8)
            .map(|bits| {
                let pattern = CalibPattern(bits);
                LadderEntry {
                    pattern,
                    offset: pattern.offset(&frac_config, f),
                }
            })
            .collect();
        all.sort_by(|a, b| {
            a.offset
                .total_cmp(&b.offset)
                .then(a.pattern.cmp(&b.pattern))
        });

        let mut entries: Vec<LadderEntry> = Vec::with_capacity(8);
        for e in all {
            match entries.last() {
                Some(last) if (e.offset - last.offset).abs() < MERGE_EPS => {}
                _ => entries.push(e),
            }
        }
        // Mirror the representatives so every level's pattern complements
        // the pattern of its negated level.
        let n = entries.len();
        for i in 0..n / 2 {
            let mirror = n - 1 - i;
            if entries[i].offset < -MERGE_EPS {
                entries[mirror].pattern = entries[i].pattern.complement();
            }
        }
        Ok(Self {
            frac_config,
            contraction_f: f,
            entries,
        })
    }

    pub fn frac_config(&self) -> FracConfig {
        self.frac_config
    }

    pub fn contraction_f(&self) -> f64 {
        self.contraction_f
    }

    pub fn entries(&self) -> &[LadderEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, level: usize) -> Option<&LadderEntry> {
        self.entries.get(level)
    }

    pub fn offsets(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.offset).collect()
    }

    /// Level whose offset is closest to zero; ties go to the lower level.
    pub fn mid_level(&self) -> usize {
        let mut best = 0;
        for (i, e) in self.entries.iter().enumerate() {
            if e.offset.abs() < self.entries[best].offset.abs() - MERGE_EPS {
                best = i;
            }
        }
        best
    }
}

/// Thresholds a ladder can compensate, as the union of one interval per
/// level.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectableRange {
    pub lo: f64,
    pub hi: f64,
    /// Whether consecutive intervals overlap or touch.
    pub contiguous: bool,
    pub intervals: Vec<(f64, f64)>,
}

impl CorrectableRange {
    pub fn contains(&self, tau: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| tau >= lo && tau < hi)
    }
}

/// For each level with offset `o`, a column with threshold `tau` resolves
/// every MAJ-x input correctly iff `V_lo + o*s <= tau < V_hi + o*s`, where
/// `V_lo`/`V_hi` are the net-neutral 8-row voltages with one fewer than /
/// exactly a majority of ones and `s = c_cell / (8 c_cell + c_bitline)`.
pub fn correctable_range(
    ladder: &OffsetLadder,
    geometry: &SubarrayGeometry,
    inputs: usize,
) -> Result<CorrectableRange> {
    if ladder.is_empty() {
        return Err(Error::Usage("ladder is empty"));
    }
    let (v_lo, v_hi) = majority_voltages(geometry, inputs)?;
    let s = geometry.coupling(8);
    let intervals: Vec<(f64, f64)> = ladder
        .entries()
        .iter()
        .map(|e| (v_lo + e.offset * s, v_hi + e.offset * s))
        .collect();
    let contiguous = intervals.windows(2).all(|w| w[1].0 <= w[0].1 + 1e-12);
    Ok(CorrectableRange {
        lo: intervals[0].0,
        hi: intervals[intervals.len() - 1].1,
        contiguous,
        intervals,
    })
}

/// Noiseless 8-row bitline voltages for the largest losing and the smallest
/// winning number of ones, with calibration rows at net-neutral charge.
pub fn majority_voltages(geometry: &SubarrayGeometry, inputs: usize) -> Result<(f64, f64)> {
    // MAJ3 runs as MAJ5 with one constant 0 and one constant 1 operand.
    let extra_ones = match inputs {
        5 => 0.0,
        3 => 1.0,
        _ => {
            return Err(Error::Config(alloc::format!(
                "unsupported MAJ input count {inputs}"
            )))
        }
    };
    let winning = inputs.div_ceil(2) as f64 + extra_ones;
    let calib_neutral = 1.5;
    let v = |ones: f64| {
        (geometry.c_cell * (ones + calib_neutral) + geometry.c_bitline * geometry.v_precharge)
            / (8.0 * geometry.c_cell + geometry.c_bitline)
    };
    Ok((v(winning - 1.0), v(winning)))
}
