//! Experiment harness, file formats and command-line front end for the
//! `pudtune-core` simulator.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod report;
pub mod table_io;

pub use pudtune_core as core;
