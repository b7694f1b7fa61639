//! CSV experiment reports.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

pub const CSV_HEADER: &str =
    "method,frac_x,frac_y,frac_z,sigma_tau,sigma_sense,seed,n_cols,n_trials,ecr,\
error_free_cols,new_error_prone,tput_maj5_ops,tput_add8_ops,tput_mul8_ops,capacity_overhead";

/// One row per arm, configuration or drift condition. Throughputs are
/// operations per second extrapolated to hardware scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub method: String,
    pub frac_x: u8,
    pub frac_y: u8,
    pub frac_z: u8,
    pub sigma_tau: f64,
    pub sigma_sense: f64,
    pub seed: u64,
    pub n_cols: usize,
    pub n_trials: usize,
    pub ecr: f64,
    pub error_free_cols: usize,
    pub new_error_prone: f64,
    pub tput_maj5_ops: f64,
    pub tput_add8_ops: f64,
    pub tput_mul8_ops: f64,
    pub capacity_overhead: f64,
}

pub fn write_csv<W: Write>(out: W, rows: &[ExperimentReport]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(path: &Path, rows: &[ExperimentReport]) -> anyhow::Result<()> {
    let file =
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_csv(std::io::BufWriter::new(file), rows)
        .with_context(|| format!("cannot write {}", path.display()))
}

/// Fixed-width text table for the terminal.
pub fn render_table(rows: &[ExperimentReport]) -> String {
    let mut s = format!(
        "{:<22} {:>7} {:>6} {:>8} {:>8} {:>11} {:>11} {:>11}\n",
        "method", "frac", "seed", "ECR", "new_ep", "MAJ5 TOPS", "ADD8 TOPS", "MUL8 TOPS"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<22} {:>7} {:>6} {:>7.2}% {:>7.3}% {:>11.3} {:>11.4} {:>11.5}\n",
            r.method,
            format!("{},{},{}", r.frac_x, r.frac_y, r.frac_z),
            r.seed,
            100.0 * r.ecr,
            100.0 * r.new_error_prone,
            r.tput_maj5_ops / 1e12,
            r.tput_add8_ops / 1e12,
            r.tput_mul8_ops / 1e12,
        ));
    }
    s
}

/// Percentage with three decimals and the one-decimal rounding, e.g.
/// `0.586% (0.6%)`.
pub fn format_overhead(fraction: f64) -> String {
    format!("{:.3}% ({:.1}%)", 100.0 * fraction, 100.0 * fraction)
}
