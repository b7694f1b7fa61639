//! MAJ-X execution flows over one subarray.
//!
//! Both flows open eight rows with one SiMRA: five operand rows and three
//! calibration rows. MAJ3 runs as MAJ5 with one constant-0 and one
//! constant-1 operand, which preserves the majority.
//!
//! - Baseline `B_{x,0,0}`: calibration row 1 is written with `1` and then
//!   contracted `x` times toward neutral; rows 2 and 3 hold constants 1, 0.
//! - Calibrated `T_{x,y,z}`: each column's calibration bits are copied in
//!   from three reserved storage rows, then rows 1..3 receive `x`, `y`, `z`
//!   Fracs respectively.

use alloc::vec::Vec;

use crate::calibration::CalibrationTable;
use crate::ladder::FracConfig;
use crate::subarray::{CopySensing, PrimitiveCounts, Subarray, SubarrayGeometry};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Baseline,
    PudTune,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::PudTune => "pudtune",
        }
    }
}

/// Source of one MAJ operand slot.
#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    /// Already resident in the subarray; moved in with RowCopy.
    Row(usize),
    /// Host-supplied bits, one per column.
    Bits(&'a [bool]),
    /// The same bit in every column, written directly.
    Const(bool),
}

/// Row layout and configuration of one MAJ unit.
#[derive(Clone, Debug, PartialEq)]
pub struct MajPlan {
    /// Majority width, 3 or 5.
    pub inputs: usize,
    pub simra_rows: [usize; 8],
    /// Calibration rows 1..3; each must be one of `simra_rows`.
    pub calib_rows: [usize; 3],
    /// Rows holding the per-column calibration bits, outside `simra_rows`.
    pub reserved_calib_storage: [usize; 3],
    /// Host-written operand sources for the calibrated flow.
    pub staging_rows: [usize; 5],
    pub frac_config: FracConfig,
    pub mode: Mode,
    pub copy_sensing: CopySensing,
}

/// First row available to other users after a plan's fixed rows.
pub const PLAN_ROWS: usize = 13;

impl MajPlan {
    /// Standard layout: SiMRA rows 0..8 with calibration rows 0..3, staging
    /// rows 8..13 and calibration storage in the last three rows.
    pub fn new(
        geometry: &SubarrayGeometry,
        inputs: usize,
        mode: Mode,
        frac_config: FracConfig,
    ) -> Result<Self> {
        let n = geometry.n_rows;
        if n < PLAN_ROWS + 3 {
            return Err(Error::Config(alloc::format!(
                "a MAJ plan needs at least {} rows, subarray has {n}",
                PLAN_ROWS + 3
            )));
        }
        let plan = Self {
            inputs,
            simra_rows: [0, 1, 2, 3, 4, 5, 6, 7],
            calib_rows: [0, 1, 2],
            reserved_calib_storage: [n - 3, n - 2, n - 1],
            staging_rows: [8, 9, 10, 11, 12],
            frac_config,
            mode,
            copy_sensing: CopySensing::Nominal,
        };
        plan.validate(geometry)?;
        Ok(plan)
    }

    pub fn with_copy_sensing(mut self, sensing: CopySensing) -> Self {
        self.copy_sensing = sensing;
        self
    }

    pub fn validate(&self, geometry: &SubarrayGeometry) -> Result<()> {
        if self.inputs != 3 && self.inputs != 5 {
            return Err(Error::Config(alloc::format!(
                "unsupported MAJ width {}",
                self.inputs
            )));
        }
        let all = self
            .simra_rows
            .iter()
            .chain(&self.reserved_calib_storage)
            .chain(&self.staging_rows);
        for &r in all.clone() {
            if r >= geometry.n_rows {
                return Err(Error::RowOutOfRange {
                    row: r,
                    n_rows: geometry.n_rows,
                });
            }
        }
        let rows: Vec<usize> = all.copied().collect();
        for (i, r) in rows.iter().enumerate() {
            if rows[..i].contains(r) {
                return Err(Error::Config(alloc::format!(
                    "row {r} assigned twice in MAJ plan"
                )));
            }
        }
        for (i, c) in self.calib_rows.iter().enumerate() {
            if !self.simra_rows.contains(c) || self.calib_rows[..i].contains(c) {
                return Err(Error::Config(
                    "calibration rows must be distinct SiMRA rows".into(),
                ));
            }
        }
        Ok(())
    }

    /// The five SiMRA rows that are not calibration rows, in order.
    pub fn operand_rows(&self) -> [usize; 5] {
        let mut out = [0; 5];
        let mut k = 0;
        for &r in &self.simra_rows {
            if !self.calib_rows.contains(&r) {
                out[k] = r;
                k += 1;
            }
        }
        out
    }

    /// Every row the plan occupies.
    pub fn occupied_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.simra_rows
            .iter()
            .chain(&self.reserved_calib_storage)
            .chain(&self.staging_rows)
            .copied()
    }

    /// Primitives issued by one MAJ, by construction of the flow. Operand
    /// and constant writes count as copies, so both modes load eight rows.
    pub fn maj_cost(&self) -> PrimitiveCounts {
        let fracs = match self.mode {
            Mode::Baseline => u64::from(self.frac_config.counts()[0]),
            Mode::PudTune => self.frac_config.total(),
        };
        PrimitiveCounts {
            writes: 0,
            row_copies: 8,
            fracs,
            simras: 1,
        }
    }
}

fn check_table(state: &Subarray, plan: &MajPlan, table: Option<&CalibrationTable>) -> Result<()> {
    if plan.mode != Mode::PudTune {
        return Ok(());
    }
    let table = table.ok_or(Error::MissingCalibration)?;
    if table.n_cols() != state.n_cols() {
        return Err(Error::GeometryMismatch {
            expected: state.n_cols(),
            found: table.n_cols(),
        });
    }
    if table.frac_config() != plan.frac_config {
        return Err(Error::Config(alloc::format!(
            "calibration table built for T_{{{}}}, plan uses T_{{{}}}",
            table.frac_config(),
            plan.frac_config
        )));
    }
    Ok(())
}

/// Writes each column's calibration bits into the plan's reserved storage
/// rows. Calibrated MAJs copy from these rows, so this must precede them.
pub fn store_calibration(
    state: &mut Subarray,
    plan: &MajPlan,
    table: &CalibrationTable,
) -> Result<()> {
    if table.n_cols() != state.n_cols() {
        return Err(Error::GeometryMismatch {
            expected: state.n_cols(),
            found: table.n_cols(),
        });
    }
    let mut bits = Vec::with_capacity(state.n_cols());
    for (j, &row) in plan.reserved_calib_storage.iter().enumerate() {
        bits.clear();
        bits.extend(table.patterns().iter().map(|p| p.bit(j)));
        state.write_row(row, &bits)?;
    }
    Ok(())
}

/// One MAJ5 over explicit operand sources. Returns the per-column result,
/// which is also left in all eight SiMRA rows.
///
/// In calibrated mode the table's patterns must already be resident in the
/// reserved storage rows (see [`store_calibration`]).
pub fn exec_maj_operands(
    state: &mut Subarray,
    plan: &MajPlan,
    operands: [Operand<'_>; 5],
    table: Option<&CalibrationTable>,
) -> Result<Vec<bool>> {
    load_maj(state, plan, operands, table)?;
    // (3) + (4) activate, sense, restore
    state.simra(&plan.simra_rows)
}

/// Steps before the SiMRA: fills the operand and calibration rows.
pub fn load_maj(
    state: &mut Subarray,
    plan: &MajPlan,
    operands: [Operand<'_>; 5],
    table: Option<&CalibrationTable>,
) -> Result<()> {
    plan.validate(state.geometry())?;
    check_table(state, plan, table)?;

    // (1) operands into their slots
    let slots = plan.operand_rows();
    for (i, (op, &slot)) in operands.iter().zip(&slots).enumerate() {
        match *op {
            Operand::Row(src) => {
                if plan.simra_rows.contains(&src) {
                    return Err(Error::Usage(
                        "operand source must lie outside the SiMRA rows",
                    ));
                }
                state.row_copy_with(src, slot, plan.copy_sensing)?;
            }
            Operand::Bits(bits) => match plan.mode {
                Mode::Baseline => state.write_row(slot, bits)?,
                Mode::PudTune => {
                    let staging = plan.staging_rows[i];
                    state.write_row(staging, bits)?;
                    state.row_copy_with(staging, slot, plan.copy_sensing)?;
                }
            },
            Operand::Const(bit) => state.write_const_row(slot, bit)?,
        }
    }

    // (2) calibration rows
    let counts = plan.frac_config.counts();
    match plan.mode {
        Mode::Baseline => {
            let [half, one, zero] = plan.calib_rows;
            state.write_const_row(half, true)?;
            state.frac_n(half, u32::from(counts[0]))?;
            state.write_const_row(one, true)?;
            state.write_const_row(zero, false)?;
        }
        Mode::PudTune => {
            for (&src, &dst) in plan.reserved_calib_storage.iter().zip(&plan.calib_rows) {
                state.row_copy_with(src, dst, plan.copy_sensing)?;
            }
            for (&row, &k) in plan.calib_rows.iter().zip(&counts) {
                state.frac_n(row, u32::from(k))?;
            }
        }
    }
    Ok(())
}

/// MAJ-`plan.inputs` over host-supplied input rows.
pub fn exec_maj<B: AsRef<[bool]>>(
    state: &mut Subarray,
    plan: &MajPlan,
    inputs: &[B],
    table: Option<&CalibrationTable>,
) -> Result<Vec<bool>> {
    if inputs.len() != plan.inputs {
        return Err(Error::LengthMismatch {
            expected: plan.inputs,
            actual: inputs.len(),
        });
    }
    let ops = match inputs {
        [a, b, c] => [
            Operand::Bits(a.as_ref()),
            Operand::Bits(b.as_ref()),
            Operand::Bits(c.as_ref()),
            Operand::Const(false),
            Operand::Const(true),
        ],
        [a, b, c, d, e] => [
            Operand::Bits(a.as_ref()),
            Operand::Bits(b.as_ref()),
            Operand::Bits(c.as_ref()),
            Operand::Bits(d.as_ref()),
            Operand::Bits(e.as_ref()),
        ],
        _ => unreachable!("plan width validated"),
    };
    exec_maj_operands(state, plan, ops, table)
}

pub fn maj3(
    state: &mut Subarray,
    plan: &MajPlan,
    a: &[bool],
    b: &[bool],
    c: &[bool],
    table: Option<&CalibrationTable>,
) -> Result<Vec<bool>> {
    let ops = [
        Operand::Bits(a),
        Operand::Bits(b),
        Operand::Bits(c),
        Operand::Const(false),
        Operand::Const(true),
    ];
    exec_maj_operands(state, plan, ops, table)
}

/// `MAJ3(a, b, 0)`.
pub fn and_op(
    state: &mut Subarray,
    plan: &MajPlan,
    a: &[bool],
    b: &[bool],
    table: Option<&CalibrationTable>,
) -> Result<Vec<bool>> {
    let ops = [
        Operand::Bits(a),
        Operand::Bits(b),
        Operand::Const(false),
        Operand::Const(false),
        Operand::Const(true),
    ];
    exec_maj_operands(state, plan, ops, table)
}

/// `MAJ3(a, b, 1)`.
pub fn or_op(
    state: &mut Subarray,
    plan: &MajPlan,
    a: &[bool],
    b: &[bool],
    table: Option<&CalibrationTable>,
) -> Result<Vec<bool>> {
    let ops = [
        Operand::Bits(a),
        Operand::Bits(b),
        Operand::Const(true),
        Operand::Const(false),
        Operand::Const(true),
    ];
    exec_maj_operands(state, plan, ops, table)
}

/// Boolean majority of `bits`.
pub fn majority(bits: &[bool]) -> bool {
    2 * bits.iter().filter(|&&b| b).count() > bits.len()
}
