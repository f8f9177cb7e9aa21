//! Program representation, dialect checking, machine state, and oracles.
//!
//! A program is a list of labeled instructions; labels are the
//! consecutive positive integers `1..=n` in program order, and
//! non-branching instructions fall through to the next label. An input
//! `(x_1, ..., x_n)` is loaded as `Z_1 := x_1; ...; Z_n := x_n` with
//! every index register set to `n`, so a program can recognize the end
//! of its input. On `halt` the output is the tuple `(Z_1, ..., Z_{I_1})`,
//! mirroring the input convention and the oracle query tuple.
//!
//! Dialects order the machine classes by what instructions may appear:
//! equality tests only (`M_add^{1,=}`), order tests (`M_add^1`), or
//! arbitrary constants (`M_add`), each with an oracle-enabled variant.
//! Index registers hold positive integers; `inc` may grow them without
//! bound (they are u64-backed here).

mod exec;
mod parse;

pub use exec::{
    label_sequence, resume, run_bounded, run_traced, step, Cell, RunOutcome, StepNote, TraceEntry,
};
pub use parse::{parse_program, ParseError, ParseErrorKind};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::reals::RealValue;

pub type Label = u32;
pub type RegId = u32;
pub type IdxId = u32;

/// One instruction body; the label is implicit in program position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instruction {
    /// `Z_dst := Z_lhs + Z_rhs`
    AddReg { dst: RegId, lhs: RegId, rhs: RegId },
    /// `Z_dst := Z_lhs - Z_rhs`
    SubReg { dst: RegId, lhs: RegId, rhs: RegId },
    /// `Z_dst := value` (0/1 in the restricted dialects)
    SetConst { dst: RegId, value: RealValue },
    /// `if Z_reg = 0 then goto if_zero else goto otherwise`
    EqTest { reg: RegId, if_zero: Label, otherwise: Label },
    /// `if Z_reg >= 0 then goto if_nonneg else goto otherwise`
    GeTest { reg: RegId, if_nonneg: Label, otherwise: Label },
    /// `Z_{I_dst} := Z_{I_src}`
    CopyIndirect { dst: IdxId, src: IdxId },
    /// `I_idx := 1`
    IndexSet { idx: IdxId },
    /// `I_idx := I_idx + 1`
    IndexInc { idx: IdxId },
    /// `if I_lhs = I_rhs then goto if_eq else goto otherwise`
    IndexTest { lhs: IdxId, rhs: IdxId, if_eq: Label, otherwise: Label },
    /// `if (Z_1, ..., Z_{I_1}) in O then goto if_member else goto otherwise`
    OracleTest { if_member: Label, otherwise: Label },
    /// Stop; output `(Z_1, ..., Z_{I_1})`.
    Halt,
}

impl Instruction {
    pub fn is_branch(&self) -> bool {
        matches!(
            self,
            Instruction::EqTest { .. }
                | Instruction::GeTest { .. }
                | Instruction::IndexTest { .. }
                | Instruction::OracleTest { .. }
        )
    }

    fn jump_targets(&self) -> Vec<Label> {
        match self {
            Instruction::EqTest { if_zero, otherwise, .. } => vec![*if_zero, *otherwise],
            Instruction::GeTest { if_nonneg, otherwise, .. } => vec![*if_nonneg, *otherwise],
            Instruction::IndexTest { if_eq, otherwise, .. } => vec![*if_eq, *otherwise],
            Instruction::OracleTest { if_member, otherwise } => vec![*if_member, *otherwise],
            _ => vec![],
        }
    }

    fn register_subscripts(&self) -> Vec<RegId> {
        match self {
            Instruction::AddReg { dst, lhs, rhs } | Instruction::SubReg { dst, lhs, rhs } => {
                vec![*dst, *lhs, *rhs]
            }
            Instruction::SetConst { dst, .. } => vec![*dst],
            Instruction::EqTest { reg, .. } | Instruction::GeTest { reg, .. } => vec![*reg],
            _ => vec![],
        }
    }

    fn index_subscripts(&self) -> Vec<IdxId> {
        match self {
            Instruction::CopyIndirect { dst, src } => vec![*dst, *src],
            Instruction::IndexSet { idx } | Instruction::IndexInc { idx } => vec![*idx],
            Instruction::IndexTest { lhs, rhs, .. } => vec![*lhs, *rhs],
            _ => vec![],
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::AddReg { dst, lhs, rhs } => write!(f, "add Z{} = Z{} + Z{}", dst, lhs, rhs),
            Instruction::SubReg { dst, lhs, rhs } => write!(f, "sub Z{} = Z{} - Z{}", dst, lhs, rhs),
            Instruction::SetConst { dst, value } => write!(f, "set Z{} = {}", dst, value),
            Instruction::EqTest { reg, if_zero, otherwise } => {
                write!(f, "eq Z{} -> {}, {}", reg, if_zero, otherwise)
            }
            Instruction::GeTest { reg, if_nonneg, otherwise } => {
                write!(f, "ge Z{} -> {}, {}", reg, if_nonneg, otherwise)
            }
            Instruction::CopyIndirect { dst, src } => write!(f, "copy Z[I{}] = Z[I{}]", dst, src),
            Instruction::IndexSet { idx } => write!(f, "idx I{} = 1", idx),
            Instruction::IndexInc { idx } => write!(f, "inc I{}", idx),
            Instruction::IndexTest { lhs, rhs, if_eq, otherwise } => {
                write!(f, "ieq I{}, I{} -> {}, {}", lhs, rhs, if_eq, otherwise)
            }
            Instruction::OracleTest { if_member, otherwise } => {
                write!(f, "oracle -> {}, {}", if_member, otherwise)
            }
            Instruction::Halt => write!(f, "halt"),
        }
    }
}

/// Instruction-set restriction, ordered from weakest to strongest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DialectBase {
    /// Equality tests only, constants 0/1.
    AddEq,
    /// Order (and equality) tests, constants 0/1.
    AddOrd,
    /// Arbitrary constants.
    AddFull,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dialect {
    pub base: DialectBase,
    pub oracle: bool,
}

impl Dialect {
    pub const ADD_EQ: Dialect = Dialect { base: DialectBase::AddEq, oracle: false };
    pub const ADD_ORD: Dialect = Dialect { base: DialectBase::AddOrd, oracle: false };

    pub fn with_oracle(base: DialectBase) -> Dialect {
        Dialect { base, oracle: true }
    }

    /// Does a program of dialect `other` belong to this machine class?
    pub fn admits(&self, other: &Dialect) -> bool {
        other.base <= self.base && (self.oracle || !other.oracle)
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.base {
            DialectBase::AddEq => "M_add^{1,=}",
            DialectBase::AddOrd => "M_add^1",
            DialectBase::AddFull => "M_add",
        };
        if self.oracle {
            write!(f, "{}(O)", base)
        } else {
            write!(f, "{}", base)
        }
    }
}

/// Structural program errors caught at construction.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("program has no instructions")]
    Empty,
    #[error("jump to undefined label {label} at label {at}")]
    UndefinedLabel { label: Label, at: Label },
    #[error("register subscripts start at 1 (at label {at})")]
    ZeroSubscript { at: Label },
    #[error("instruction at final label {at} would fall through past the end")]
    TrailingFallthrough { at: Label },
}

/// A validated program: labels `1..=len`, all jump targets defined, the
/// final instruction cannot fall through, and the dialect is the
/// smallest one admitting every instruction. The index-register count
/// `k` is the largest index subscript used (at least 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    instructions: Vec<Instruction>,
    index_registers: IdxId,
    dialect: Dialect,
}

impl Program {
    pub fn new(instructions: Vec<Instruction>) -> Result<Program, ProgramError> {
        if instructions.is_empty() {
            return Err(ProgramError::Empty);
        }
        let n = instructions.len() as Label;
        let mut index_registers: IdxId = 1;
        let mut oracle = false;
        let mut base = DialectBase::AddEq;
        for (pos, instr) in instructions.iter().enumerate() {
            let at = pos as Label + 1;
            for t in instr.jump_targets() {
                if t == 0 || t > n {
                    return Err(ProgramError::UndefinedLabel { label: t, at });
                }
            }
            if instr.register_subscripts().contains(&0) {
                return Err(ProgramError::ZeroSubscript { at });
            }
            for idx in instr.index_subscripts() {
                if idx == 0 {
                    return Err(ProgramError::ZeroSubscript { at });
                }
                index_registers = index_registers.max(idx);
            }
            match instr {
                Instruction::OracleTest { .. } => oracle = true,
                Instruction::GeTest { .. } => base = base.max(DialectBase::AddOrd),
                Instruction::SetConst { value, .. }
                    if !(value.is_zero_value() || *value == RealValue::one()) =>
                {
                    base = DialectBase::AddFull;
                }
                _ => {}
            }
        }
        let last = instructions.last().unwrap();
        if !last.is_branch() && !matches!(last, Instruction::Halt) {
            return Err(ProgramError::TrailingFallthrough { at: n });
        }
        Ok(Program {
            instructions,
            index_registers,
            dialect: Dialect { base, oracle },
        })
    }

    /// The canonical one-instruction machine that halts on anything.
    pub fn trivial() -> Program {
        Program::new(vec![Instruction::Halt]).unwrap()
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        false // validated programs are nonempty
    }

    pub fn instruction_at(&self, label: Label) -> Option<&Instruction> {
        if label == 0 {
            return None;
        }
        self.instructions.get(label as usize - 1)
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    pub fn index_registers(&self) -> IdxId {
        self.index_registers
    }
}

/// Canonical assembly text; `parse_program` inverts this exactly.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (pos, instr) in self.instructions.iter().enumerate() {
            writeln!(f, "{}: {}", pos + 1, instr)?;
        }
        Ok(())
    }
}

/// Runtime errors during execution.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MachineError {
    #[error("machine input must be a nonempty tuple")]
    EmptyInput,
    #[error("oracle instruction at label {at} but no oracle attached")]
    OracleMissing { at: Label },
    #[error("program counter {pc} is out of range")]
    InvalidPc { pc: Label },
}

/// Full machine configuration between steps. Register cells absent from
/// the sparse map read as exact 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineState {
    pc: Label,
    z: BTreeMap<u64, RealValue>,
    i: Vec<u64>,
    steps: u64,
}

impl MachineState {
    pub fn pc(&self) -> Label {
        self.pc
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Contents of `Z_r` (exact 0 when unwritten).
    pub fn register(&self, r: u64) -> RealValue {
        self.z.get(&r).cloned().unwrap_or_else(RealValue::zero)
    }

    pub(crate) fn register_ref(&self, r: u64) -> Option<&RealValue> {
        self.z.get(&r)
    }

    /// Every explicitly written register cell.
    pub fn written_registers(&self) -> impl Iterator<Item = (&u64, &RealValue)> {
        self.z.iter()
    }

    pub fn index_register(&self, j: IdxId) -> u64 {
        self.i[j as usize - 1]
    }

    pub fn index_values(&self) -> &[u64] {
        &self.i
    }

    pub(crate) fn set_register(&mut self, r: u64, v: RealValue) {
        if v.is_zero_value() {
            self.z.remove(&r);
        } else {
            self.z.insert(r, v);
        }
    }

    pub(crate) fn set_pc(&mut self, pc: Label) {
        self.pc = pc;
    }

    pub(crate) fn set_index(&mut self, j: IdxId, v: u64) {
        self.i[j as usize - 1] = v;
    }

    pub(crate) fn bump_steps(&mut self) {
        self.steps += 1;
    }

    /// The current query/output tuple `(Z_1, ..., Z_{I_1})`.
    pub fn front_tuple(&self) -> Vec<RealValue> {
        (1..=self.i[0]).map(|r| self.register(r)).collect()
    }
}

/// Loads an input tuple: `Z_1..Z_n` hold the input, every index
/// register starts at `n`, the program counter at label 1.
pub fn init_state(program: &Program, input: &[RealValue]) -> Result<MachineState, MachineError> {
    if input.is_empty() {
        return Err(MachineError::EmptyInput);
    }
    let mut z = BTreeMap::new();
    for (k, v) in input.iter().enumerate() {
        if !v.is_zero_value() {
            z.insert(k as u64 + 1, v.clone());
        }
    }
    Ok(MachineState {
        pc: 1,
        z,
        i: vec![input.len() as u64; program.index_registers() as usize],
        steps: 0,
    })
}

/// A total membership procedure on finite real tuples.
pub type OracleFn = Arc<dyn Fn(&[RealValue]) -> bool + Send + Sync>;

/// An oracle set: a named membership procedure.
#[derive(Clone)]
pub struct OracleSpec {
    name: String,
    decide: OracleFn,
}

impl OracleSpec {
    pub fn new(
        name: impl Into<String>,
        decide: impl Fn(&[RealValue]) -> bool + Send + Sync + 'static,
    ) -> OracleSpec {
        OracleSpec {
            name: name.into(),
            decide: Arc::new(decide),
        }
    }

    /// The empty oracle: every query answers "out".
    pub fn empty() -> OracleSpec {
        OracleSpec::new("empty", |_| false)
    }

    /// Membership in a finite set of positive integers; only length-1
    /// integer tuples can answer "in".
    pub fn finite_integer_set(
        name: impl Into<String>,
        members: std::collections::BTreeSet<u64>,
    ) -> OracleSpec {
        OracleSpec::new(name, move |tuple| {
            if tuple.len() != 1 {
                return false;
            }
            tuple[0].as_u64().is_some_and(|n| members.contains(&n))
        })
    }

    /// Membership in an explicit finite set of tuples (exact equality).
    pub fn finite_tuples(name: impl Into<String>, members: Vec<Vec<RealValue>>) -> OracleSpec {
        OracleSpec::new(name, move |tuple| members.iter().any(|m| m == tuple))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn decide(&self, tuple: &[RealValue]) -> bool {
        (self.decide)(tuple)
    }
}

impl fmt::Debug for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleSpec").field("name", &self.name).finish()
    }
}
