//! Behavioral, charge-level model of majority (MAJ-X) operations executed
//! inside unmodified DRAM subarrays, together with per-column offset
//! calibration built from multi-level (partially charged) calibration rows.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. Everything
//! that touches files, the command line or threads lives in the `pudtune`
//! companion crate.
//!
//! Module map:
//!
//! - [`subarray`]: cells, bitline charge sharing, sense amplifiers and the
//!   three timing-violation primitives (RowCopy, Frac, SiMRA).
//! - [`variation`]: per-column sense-amplifier thresholds and their drift.
//! - [`ladder`] and [`exec`]: calibration offset ladders and the baseline /
//!   calibrated MAJ-X execution flows.
//! - [`calibration`]: iterative identification of per-column ladder levels.
//! - [`arith`]: dual-rail majority arithmetic (full adder, 8-bit add/mul).
//! - [`metrics`]: error-prone column measurement, latency and throughput.

#![no_std]
// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod arith;
pub mod calibration;
mod error;
pub mod exec;
pub mod ladder;
pub mod metrics;
pub mod seed;
pub mod subarray;
pub mod variation;

pub use error::Error;

pub use arith::{op_cost, ArithOp, ColumnOperand, DualRail, Signal};
pub use calibration::{
    calibrate, calibrate_with, get_bias, majx_sampling, BiasMode, CalibParams, CalibrationTable,
    SampleSet, SamplingScheme,
};
pub use exec::{and_op, exec_maj, maj3, or_op, store_calibration, MajPlan, Mode};
pub use ladder::{correctable_range, CalibPattern, CorrectableRange, FracConfig, OffsetLadder};
pub use metrics::{capacity_overhead, measure_ecr, throughput, EcrMeasurement, LatencyModel};
pub use subarray::{
    charge_share, sense, CellCharge, CopySensing, NoiseConfig, PrimitiveCounts, Subarray,
    SubarrayGeometry,
};
pub use variation::{drift_profile, sample_profile, DriftConfig, SenseAmpProfile};

pub type Result<T, E = Error> = core::result::Result<T, E>;
