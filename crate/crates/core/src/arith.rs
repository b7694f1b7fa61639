//! Bit-serial arithmetic built from majority gates.
//!
//! DRAM has no in-array NOT, so operands are stored dual-rail: every bit
//! row has a companion row holding its complement, written at load time.
//! Complements propagate through the self-duality of majority,
//! `!MAJ(x..) = MAJ(!x..)`.
//!
//! Full adder over dual-rail `a, b, c`:
//!
//! ```text
//! carry  = MAJ3(a, b, c)
//! carry' = MAJ3(a', b', c')
//! sum    = MAJ5(a, b, c, carry', carry')
//! sum'   = MAJ5(a', b', c', carry, carry)   only when a later stage reads it
//! ```
//!
//! Addition is ripple-carry. Multiplication is schoolbook shift-and-add:
//! AND partial products (`a & b = MAJ3(a, b, 0)`, complement
//! `a' | b' = MAJ3(a', b', 1)`) accumulated one 8-bit ripple addition per
//! multiplier bit.
//!
//! The graphs are written once against [`MajBackend`]; [`ArithEngine`] runs
//! them on a subarray and [`op_cost`] walks them with a counting backend.

use alloc::vec::Vec;

use crate::calibration::CalibrationTable;
use crate::exec::{exec_maj_operands, store_calibration, MajPlan, Mode, Operand};
use crate::subarray::{PrimitiveCounts, Subarray};
use crate::{Error, Result};

/// A per-column bit: a subarray row, or the same constant in every column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signal {
    Row(usize),
    Const(bool),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualRail {
    pub value: Signal,
    pub complement: Signal,
}

impl DualRail {
    pub fn constant(bit: bool) -> Self {
        Self {
            value: Signal::Const(bit),
            complement: Signal::Const(!bit),
        }
    }

    pub fn rows(value: usize, complement: usize) -> Self {
        Self {
            value: Signal::Row(value),
            complement: Signal::Row(complement),
        }
    }
}

/// Executes majority gates and owns scratch rows.
pub trait MajBackend {
    /// `MAJ5` of the five signals, left in a fresh scratch row.
    fn maj5(&mut self, ops: [Signal; 5]) -> Result<Signal>;

    /// Returns a scratch row to the pool. Constants are ignored.
    fn release(&mut self, signal: Signal);

    fn maj3(&mut self, a: Signal, b: Signal, c: Signal) -> Result<Signal> {
        self.maj5([a, b, c, Signal::Const(false), Signal::Const(true)])
    }

    fn release_pair(&mut self, d: DualRail) {
        self.release(d.value);
        self.release(d.complement);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FullAdderOut {
    pub sum: Signal,
    pub sum_complement: Option<Signal>,
    pub carry: DualRail,
}

pub fn full_adder<B: MajBackend + ?Sized>(
    be: &mut B,
    a: DualRail,
    b: DualRail,
    c: DualRail,
    want_sum_complement: bool,
) -> Result<FullAdderOut> {
    let carry = be.maj3(a.value, b.value, c.value)?;
    let carry_n = be.maj3(a.complement, b.complement, c.complement)?;
    let sum = be.maj5([a.value, b.value, c.value, carry_n, carry_n])?;
    let sum_complement = if want_sum_complement {
        Some(be.maj5([a.complement, b.complement, c.complement, carry, carry])?)
    } else {
        None
    };
    Ok(FullAdderOut {
        sum,
        sum_complement,
        carry: DualRail {
            value: carry,
            complement: carry_n,
        },
    })
}

/// Ripple-carry sum of equal-width operands, carry-in zero. Returns the
/// A sum bit and, when kept, its complement.
type SumBit = (Signal, Option<Signal>);

/// sum bits LSB first (with complements where `keep_complement(i)`) and the
/// dual-rail carry out. Consumes nothing: the caller still owns `a`, `b`.
fn ripple_add<B: MajBackend + ?Sized>(
    be: &mut B,
    a: &[DualRail],
    b: &[DualRail],
    keep_complement: impl Fn(usize) -> bool,
) -> Result<(Vec<SumBit>, DualRail)> {
    let mut sums = Vec::with_capacity(a.len());
    let mut carry = DualRail::constant(false);
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        let fa = full_adder(be, x, y, carry, keep_complement(i))?;
        be.release_pair(carry);
        carry = fa.carry;
        sums.push((fa.sum, fa.sum_complement));
    }
    Ok((sums, carry))
}

/// `a + b`, `n + 1` single-rail bits LSB first.
pub fn add_graph<B: MajBackend + ?Sized>(
    be: &mut B,
    a: &[DualRail],
    b: &[DualRail],
) -> Result<Vec<Signal>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (sums, carry) = ripple_add(be, a, b, |_| false)?;
    be.release(carry.complement);
    let mut out: Vec<Signal> = sums.into_iter().map(|(s, _)| s).collect();
    out.push(carry.value);
    Ok(out)
}

/// `a * b`, `2n` single-rail bits LSB first.
pub fn mul_graph<B: MajBackend + ?Sized>(
    be: &mut B,
    a: &[DualRail],
    b: &[DualRail],
) -> Result<Vec<Signal>> {
    let n = a.len();
    if n != b.len() {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let partial = |be: &mut B, i: usize, need: &dyn Fn(usize) -> bool| -> Result<Vec<DualRail>> {
        let mut row = Vec::with_capacity(n);
        for (j, x) in a.iter().enumerate() {
            let value = be.maj3(x.value, b[i].value, Signal::Const(false))?;
            let complement = if need(j) {
                be.maj3(x.complement, b[i].complement, Signal::Const(true))?
            } else {
                Signal::Const(false)
            };
            row.push(DualRail { value, complement });
        }
        Ok(row)
    };

    let mut result = Vec::with_capacity(2 * n);
    // Bit 0 of the first partial product is final right away.
    let mut acc = partial(be, 0, &|j| j > 0)?;
    for i in 1..n {
        let done = acc.remove(0);
        result.push(done.value);
        be.release(done.complement);
        // Window of weights i..i+n-1; the top bit is the previous carry.
        if acc.len() < n {
            acc.push(DualRail::constant(false));
        }
        let pp = partial(be, i, &|_| true)?;
        let last = i == n - 1;
        let (sums, carry) = ripple_add(be, &acc, &pp, |k| !last && k > 0)?;
        for d in acc.drain(..).chain(pp) {
            be.release_pair(d);
        }
        acc = sums
            .into_iter()
            .map(|(s, c)| DualRail {
                value: s,
                complement: c.unwrap_or(Signal::Const(false)),
            })
            .collect();
        acc.push(carry);
    }
    for d in acc {
        result.push(d.value);
        be.release(d.complement);
    }
    Ok(result)
}

/// Multi-bit operand stored in one subarray, one value per column, LSB
/// first. Complement rows are empty for single-rail results.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnOperand {
    pub width: usize,
    pub rows_value: Vec<usize>,
    pub rows_complement: Vec<usize>,
}

impl ColumnOperand {
    pub fn is_dual_rail(&self) -> bool {
        self.rows_complement.len() == self.width
    }

    pub fn dual_rail(&self) -> Result<Vec<DualRail>> {
        if !self.is_dual_rail() {
            return Err(Error::Usage("operand has no complement rows"));
        }
        Ok(self
            .rows_value
            .iter()
            .zip(&self.rows_complement)
            .map(|(&v, &c)| DualRail::rows(v, c))
            .collect())
    }
}

/// Pool of rows free for operands and intermediates.
#[derive(Clone, Debug)]
pub struct RowAllocator {
    free: Vec<usize>,
    capacity: usize,
}

impl RowAllocator {
    /// Every row of an `n_rows` subarray not used by `plan`.
    pub fn for_plan(n_rows: usize, plan: &MajPlan) -> Self {
        let taken: Vec<usize> = plan.occupied_rows().collect();
        // Reverse so that pops hand out low rows first.
        let free: Vec<usize> = (0..n_rows).rev().filter(|r| !taken.contains(r)).collect();
        Self {
            capacity: free.len(),
            free,
        }
    }

    pub fn alloc(&mut self) -> Result<usize> {
        self.free.pop().ok_or(Error::Capacity {
            needed: self.capacity + 1,
        })
    }

    pub fn release(&mut self, row: usize) {
        debug_assert!(!self.free.contains(&row), "row {row} released twice");
        self.free.push(row);
    }

    pub fn available(&self) -> usize {
        self.free.len()
    }
}

/// Runs arithmetic graphs on a subarray. In calibrated mode the table is
/// stored into the reserved rows on construction.
pub struct ArithEngine<'a> {
    state: &'a mut Subarray,
    plan: &'a MajPlan,
    table: Option<&'a CalibrationTable>,
    rows: RowAllocator,
}

impl<'a> ArithEngine<'a> {
    pub fn new(
        state: &'a mut Subarray,
        plan: &'a MajPlan,
        table: Option<&'a CalibrationTable>,
    ) -> Result<Self> {
        plan.validate(state.geometry())?;
        if plan.mode == Mode::PudTune {
            store_calibration(state, plan, table.ok_or(Error::MissingCalibration)?)?;
        }
        let rows = RowAllocator::for_plan(state.n_rows(), plan);
        Ok(Self {
            state,
            plan,
            table,
            rows,
        })
    }

    pub fn state(&self) -> &Subarray {
        self.state
    }

    pub fn rows_available(&self) -> usize {
        self.rows.available()
    }

    /// Writes one `width`-bit value per column, dual-rail.
    pub fn load(&mut self, values: &[u64], width: usize) -> Result<ColumnOperand> {
        let n = self.state.n_cols();
        if values.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: values.len(),
            });
        }
        let mut op = ColumnOperand {
            width,
            rows_value: Vec::with_capacity(width),
            rows_complement: Vec::with_capacity(width),
        };
        let mut bits = Vec::with_capacity(n);
        for i in 0..width {
            let v = self.rows.alloc()?;
            let c = self.rows.alloc()?;
            bits.clear();
            bits.extend(values.iter().map(|x| (x >> i) & 1 == 1));
            self.state.write_row(v, &bits)?;
            for b in bits.iter_mut() {
                *b = !*b;
            }
            self.state.write_row(c, &bits)?;
            op.rows_value.push(v);
            op.rows_complement.push(c);
        }
        Ok(op)
    }

    /// Per-column integer held in the value rows.
    pub fn read(&self, op: &ColumnOperand) -> Result<Vec<u64>> {
        let mut out = alloc::vec![0u64; self.state.n_cols()];
        for (i, &r) in op.rows_value.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(self.state.row_bits(r)?) {
                *o |= u64::from(b) << i;
            }
        }
        Ok(out)
    }

    /// Frees every row of `op`.
    pub fn free(&mut self, op: ColumnOperand) {
        for r in op.rows_value.into_iter().chain(op.rows_complement) {
            self.rows.release(r);
        }
    }

    pub fn full_adder(&mut self, a: DualRail, b: DualRail, c: DualRail) -> Result<FullAdderOut> {
        full_adder(self, a, b, c, true)
    }

    pub fn add8(&mut self, a: &ColumnOperand, b: &ColumnOperand) -> Result<ColumnOperand> {
        let (x, y) = (eight_bit(a)?, eight_bit(b)?);
        let bits = add_graph(self, &x, &y)?;
        self.collect(bits)
    }

    pub fn mul8(&mut self, a: &ColumnOperand, b: &ColumnOperand) -> Result<ColumnOperand> {
        let (x, y) = (eight_bit(a)?, eight_bit(b)?);
        let bits = mul_graph(self, &x, &y)?;
        self.collect(bits)
    }

    fn collect(&mut self, bits: Vec<Signal>) -> Result<ColumnOperand> {
        let mut rows = Vec::with_capacity(bits.len());
        for s in bits {
            rows.push(match s {
                Signal::Row(r) => r,
                Signal::Const(bit) => {
                    let r = self.rows.alloc()?;
                    self.state.write_const_row(r, bit)?;
                    r
                }
            });
        }
        Ok(ColumnOperand {
            width: rows.len(),
            rows_value: rows,
            rows_complement: Vec::new(),
        })
    }
}

fn eight_bit(op: &ColumnOperand) -> Result<Vec<DualRail>> {
    if op.width != 8 {
        return Err(Error::Usage(
            "8-bit operation on an operand of another width",
        ));
    }
    op.dual_rail()
}

impl MajBackend for ArithEngine<'_> {
    fn maj5(&mut self, ops: [Signal; 5]) -> Result<Signal> {
        let dst = self.rows.alloc()?;
        let operands = ops.map(|s| match s {
            Signal::Row(r) => Operand::Row(r),
            Signal::Const(b) => Operand::Const(b),
        });
        exec_maj_operands(self.state, self.plan, operands, self.table)?;
        // Every opened row holds the restored result; move it out of the
        // SiMRA group before the next gate overwrites it.
        let src = self.plan.operand_rows()[0];
        self.state.row_copy_with(src, dst, self.plan.copy_sensing)?;
        Ok(Signal::Row(dst))
    }

    fn release(&mut self, signal: Signal) {
        if let Signal::Row(r) = signal {
            self.rows.release(r);
        }
    }
}

/// Counts gates and scratch-row pressure without touching a subarray.
#[derive(Clone, Debug, Default)]
pub struct CostCounter {
    pub majs: u64,
    live: usize,
    pub peak_rows: usize,
    next: usize,
}

impl MajBackend for CostCounter {
    fn maj5(&mut self, _ops: [Signal; 5]) -> Result<Signal> {
        self.majs += 1;
        self.live += 1;
        self.peak_rows = self.peak_rows.max(self.live);
        // Distinct placeholder rows keep the graph's bookkeeping honest.
        self.next += 1;
        Ok(Signal::Row(usize::MAX - self.next))
    }

    fn release(&mut self, signal: Signal) {
        if let Signal::Row(_) = signal {
            self.live -= 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Maj3,
    Maj5,
    Add8,
    Mul8,
}

impl ArithOp {
    pub fn name(self) -> &'static str {
        match self {
            ArithOp::Maj3 => "maj3",
            ArithOp::Maj5 => "maj5",
            ArithOp::Add8 => "add8",
            ArithOp::Mul8 => "mul8",
        }
    }
}

/// Majority gates in one operation's graph.
pub fn gate_count(op: ArithOp) -> u64 {
    match op {
        ArithOp::Maj3 | ArithOp::Maj5 => 1,
        ArithOp::Add8 | ArithOp::Mul8 => walk(op).majs,
    }
}

fn walk(op: ArithOp) -> CostCounter {
    let mut cc = CostCounter::default();
    let inputs: Vec<DualRail> = (0..8).map(|i| DualRail::rows(2 * i, 2 * i + 1)).collect();
    let out = match op {
        ArithOp::Add8 => add_graph(&mut cc, &inputs, &inputs),
        ArithOp::Mul8 => mul_graph(&mut cc, &inputs, &inputs),
        _ => Ok(Vec::new()),
    };
    debug_assert!(out.is_ok(), "counting backend never fails");
    cc
}

/// Scratch rows an operation needs at its peak, besides its operands and
/// its result.
pub fn scratch_rows(op: ArithOp) -> usize {
    walk(op).peak_rows
}

/// Primitives one operation issues under `plan`. Standalone MAJ-X costs the
/// plan's flow; inside arithmetic graphs each gate also copies its result
/// out of the SiMRA rows. Operand loading is not included.
pub fn op_cost(op: ArithOp, plan: &MajPlan) -> PrimitiveCounts {
    let gate = plan.maj_cost();
    match op {
        ArithOp::Maj3 | ArithOp::Maj5 => gate,
        ArithOp::Add8 | ArithOp::Mul8 => {
            let per = gate
                + PrimitiveCounts {
                    row_copies: 1,
                    ..PrimitiveCounts::default()
                };
            let n = gate_count(op);
            PrimitiveCounts {
                writes: per.writes * n,
                row_copies: per.row_copies * n,
                fracs: per.fracs * n,
                simras: per.simras * n,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::FracConfig;
    use crate::subarray::{NoiseConfig, SubarrayGeometry};
    use crate::variation::SenseAmpProfile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(
        profile: SenseAmpProfile,
        rows: usize,
        mode: Mode,
    ) -> (Subarray, MajPlan, CalibrationTable) {
        let g = SubarrayGeometry::new(rows, profile.len());
        let s = Subarray::new(g, profile, NoiseConfig::noiseless()).unwrap();
        let frac = match mode {
            Mode::Baseline => FracConfig::new(3, 0, 0).unwrap(),
            Mode::PudTune => FracConfig::new(2, 1, 0).unwrap(),
        };
        let plan = MajPlan::new(&g, 5, mode, frac).unwrap();
        let table =
            CalibrationTable::mid_level(FracConfig::new(2, 1, 0).unwrap(), 0.5, g.n_cols).unwrap();
        (s, plan, table)
    }

    #[test]
    fn full_adder_truth_table() {
        for mode in [Mode::Baseline, Mode::PudTune] {
            let (mut s, plan, table) = setup(SenseAmpProfile::ideal(8), 64, mode);
            let mut e = ArithEngine::new(&mut s, &plan, Some(&table)).unwrap();
            let cases: Vec<u64> = (0..8).collect();
            let a = e
                .load(&cases.iter().map(|x| x & 1).collect::<Vec<_>>(), 1)
                .unwrap();
            let b = e
                .load(&cases.iter().map(|x| (x >> 1) & 1).collect::<Vec<_>>(), 1)
                .unwrap();
            let c = e
                .load(&cases.iter().map(|x| (x >> 2) & 1).collect::<Vec<_>>(), 1)
                .unwrap();
            let fa = e
                .full_adder(
                    a.dual_rail().unwrap()[0],
                    b.dual_rail().unwrap()[0],
                    c.dual_rail().unwrap()[0],
                )
                .unwrap();
            let row = |e: &ArithEngine, s: Signal| match s {
                Signal::Row(r) => e.state().row_bits(r).unwrap(),
                Signal::Const(_) => unreachable!(),
            };
            let sum = row(&e, fa.sum);
            let sum_n = row(&e, fa.sum_complement.unwrap());
            let carry = row(&e, fa.carry.value);
            let carry_n = row(&e, fa.carry.complement);
            for k in 0..8 {
                let ones = (k as u32).count_ones();
                assert_eq!(sum[k], ones % 2 == 1, "{mode:?} case {k}");
                assert_eq!(carry[k], ones >= 2, "{mode:?} case {k}");
                assert_eq!(carry_n[k], !carry[k]);
                assert_eq!(sum_n[k], !sum[k]);
            }
        }
    }

    #[test]
    fn small_sums() {
        let (mut s, plan, table) = setup(SenseAmpProfile::ideal(16), 256, Mode::PudTune);
        let mut e = ArithEngine::new(&mut s, &plan, Some(&table)).unwrap();
        let a = e.load(&[3; 16], 8).unwrap();
        let b = e.load(&[5; 16], 8).unwrap();
        let r = e.add8(&a, &b).unwrap();
        assert_eq!(r.width, 9);
        assert!(e.read(&r).unwrap().iter().all(|&v| v == 8));

        let vals: Vec<u64> = (0..16).map(|i| i * 17 % 256).collect();
        let x = e.load(&vals, 8).unwrap();
        let zero = e.load(&[0; 16], 8).unwrap();
        let r = e.add8(&x, &zero).unwrap();
        assert_eq!(e.read(&r).unwrap(), vals);
        let p = e.mul8(&x, &zero).unwrap();
        assert!(e.read(&p).unwrap().iter().all(|&v| v == 0));
        let one = e.load(&[1; 16], 8).unwrap();
        let p = e.mul8(&x, &one).unwrap();
        assert_eq!(p.width, 16);
        assert_eq!(e.read(&p).unwrap(), vals);
    }

    fn random_pairs(n: usize, seed: u64) -> (Vec<u64>, Vec<u64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (rng.random::<u8>() as u64, rng.random::<u8>() as u64))
            .unzip()
    }

    #[test]
    fn matches_integer_oracle_on_random_pairs() {
        let n = 10_000;
        let (xs, ys) = random_pairs(n, 11);
        for mode in [Mode::Baseline, Mode::PudTune] {
            let (mut s, plan, table) = setup(SenseAmpProfile::ideal(n), 128, mode);
            let mut e = ArithEngine::new(&mut s, &plan, Some(&table)).unwrap();
            let a = e.load(&xs, 8).unwrap();
            let b = e.load(&ys, 8).unwrap();
            let sum = e.add8(&a, &b).unwrap();
            let prod = e.mul8(&a, &b).unwrap();
            let sums = e.read(&sum).unwrap();
            let prods = e.read(&prod).unwrap();
            for i in 0..n {
                assert_eq!(sums[i], xs[i] + ys[i]);
                assert_eq!(prods[i], xs[i] * ys[i]);
            }
        }
    }

    #[test]
    fn costs_match_issued_primitives() {
        let (mut s, plan, table) = setup(SenseAmpProfile::ideal(4), 128, Mode::PudTune);
        assert_eq!(
            op_cost(ArithOp::Maj5, &plan),
            PrimitiveCounts {
                writes: 0,
                row_copies: 8,
                fracs: 3,
                simras: 1
            }
        );
        assert_eq!(op_cost(ArithOp::Add8, &plan).simras, 24);
        assert_eq!(op_cost(ArithOp::Mul8, &plan).simras, 337);

        let mut e = ArithEngine::new(&mut s, &plan, Some(&table)).unwrap();
        let a = e.load(&[200, 1, 77, 255], 8).unwrap();
        let b = e.load(&[100, 0, 3, 255], 8).unwrap();
        for op in [ArithOp::Add8, ArithOp::Mul8] {
            e.state.reset_counts();
            let r = match op {
                ArithOp::Add8 => e.add8(&a, &b),
                _ => e.mul8(&a, &b),
            }
            .unwrap();
            let got = e.state().counts();
            let want = op_cost(op, &plan);
            assert_eq!(
                got.writes + got.row_copies,
                want.writes + want.row_copies,
                "{op:?}"
            );
            assert_eq!((got.fracs, got.simras), (want.fracs, want.simras), "{op:?}");
            e.free(r);
        }
    }

    #[test]
    fn rows_are_recycled() {
        let (mut s, plan, table) = setup(SenseAmpProfile::ideal(4), 128, Mode::PudTune);
        let mut e = ArithEngine::new(&mut s, &plan, Some(&table)).unwrap();
        let start = e.rows_available();
        let a = e.load(&[9, 8, 7, 6], 8).unwrap();
        let b = e.load(&[1, 2, 3, 4], 8).unwrap();
        let p = e.mul8(&a, &b).unwrap();
        assert_eq!(e.rows_available(), start - 32 - 16);
        assert!(scratch_rows(ArithOp::Mul8) + 16 <= start - 32);
        e.free(p);
        e.free(a);
        e.free(b);
        assert_eq!(e.rows_available(), start);
    }

    #[test]
    fn too_few_rows_is_a_capacity_error() {
        let (mut s, plan, table) = setup(SenseAmpProfile::ideal(4), 64, Mode::PudTune);
        let mut e = ArithEngine::new(&mut s, &plan, Some(&table)).unwrap();
        let a = e.load(&[1; 4], 8).unwrap();
        let b = e.load(&[2; 4], 8).unwrap();
        assert!(matches!(e.mul8(&a, &b), Err(Error::Capacity { .. })));
    }

    #[test]
    fn operand_checks() {
        let (mut s, plan, table) = setup(SenseAmpProfile::ideal(4), 128, Mode::PudTune);
        let mut e = ArithEngine::new(&mut s, &plan, Some(&table)).unwrap();
        let a = e.load(&[1; 4], 4).unwrap();
        let b = e.load(&[2; 4], 8).unwrap();
        assert!(e.add8(&a, &b).is_err());
        assert!(e.load(&[1; 3], 8).is_err());
        let (mut s, plan, _) = setup(SenseAmpProfile::ideal(4), 128, Mode::PudTune);
        assert!(ArithEngine::new(&mut s, &plan, None).is_err());
    }

    #[test]
    fn a_bad_column_does_not_disturb_its_neighbours() {
        let n = 64;
        let (xs, ys) = random_pairs(n, 5);
        let run = |profile: SenseAmpProfile| {
            let (mut s, plan, table) = setup(profile, 128, Mode::PudTune);
            let mut e = ArithEngine::new(&mut s, &plan, Some(&table)).unwrap();
            let a = e.load(&xs, 8).unwrap();
            let b = e.load(&ys, 8).unwrap();
            let p = e.mul8(&a, &b).unwrap();
            e.read(&p).unwrap()
        };
        let clean = run(SenseAmpProfile::ideal(n));
        let mut bad = SenseAmpProfile::ideal(n);
        bad.set(9, 0.7).unwrap();
        let dirty = run(bad);
        for c in 0..n {
            if c != 9 {
                assert_eq!(clean[c], dirty[c]);
            }
        }
    }
}
