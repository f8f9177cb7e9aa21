//! Bit-level program codes, machine indices, and the total enumeration.
//!
//! Each program symbol is encoded by exactly 5 bits; the code of a
//! program is the concatenation of its instruction streams, each
//! terminated by `SEP`. Register subscripts and jump labels use a
//! self-delimiting unary-then-binary form: for a subscript with binary
//! digits `b_1 ... b_L` (`b_1 = 1`), the stream carries `L-1` copies of
//! `UNARY` followed by the `L` digits as `BIT1`/`BIT0`.
//!
//! The symbol table is normative and frozen by golden tests:
//!
//! | symbol | code  | | symbol | code  |
//! |--------|-------|-|--------|-------|
//! | SEP    | 00000 | | HALT   | 01011 |
//! | ADD    | 00001 | | REGZ   | 01100 |
//! | SUB    | 00010 | | REGI   | 01101 |
//! | SET    | 00011 | | ZERO   | 01110 |
//! | EQ     | 00100 | | ONE    | 01111 |
//! | GE     | 00101 | | UNARY  | 10000 |
//! | COPY   | 00110 | | BIT0   | 10001 |
//! | IDXSET | 00111 | | BIT1   | 10010 |
//! | IDXINC | 01000 | |        |       |
//! | IDXEQ  | 01001 | |        |       |
//! | ORACLE | 01010 | |        |       |
//!
//! Instruction streams (subscripts `s(.)`, `SEP` terminates each):
//! `ADD REGZ s(i) REGZ s(j) REGZ s(k)`, `SUB` likewise,
//! `SET REGZ s(j) (ZERO|ONE)`, `EQ REGZ s(j) s(l1) s(l2)`, `GE`
//! likewise, `COPY REGI s(j) REGI s(k)`, `IDXSET REGI s(j)`,
//! `IDXINC REGI s(j)`, `IDXEQ REGI s(j) REGI s(k) s(l1) s(l2)`,
//! `ORACLE s(l1) s(l2)`, `HALT`.
//!
//! The index of a machine is `K = 2^|code| + c` where `c` is the
//! integer whose binary expansion is the code (the offset preserves
//! leading zeros). Indices that are not the code of a valid program of
//! the requested class map to the trivial machine `1: halt`, giving a
//! total enumeration.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

use crate::machine::{Dialect, Instruction, Label, Program, RegId};
use crate::reals::RealValue;

pub const SYMBOL_WIDTH: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sym {
    Sep = 0,
    Add = 1,
    Sub = 2,
    Set = 3,
    Eq = 4,
    Ge = 5,
    Copy = 6,
    IdxSet = 7,
    IdxInc = 8,
    IdxEq = 9,
    Oracle = 10,
    Halt = 11,
    RegZ = 12,
    RegI = 13,
    Zero = 14,
    One = 15,
    Unary = 16,
    Bit0 = 17,
    Bit1 = 18,
}

impl Sym {
    fn from_code(code: u8) -> Option<Sym> {
        use Sym::*;
        Some(match code {
            0 => Sep,
            1 => Add,
            2 => Sub,
            3 => Set,
            4 => Eq,
            5 => Ge,
            6 => Copy,
            7 => IdxSet,
            8 => IdxInc,
            9 => IdxEq,
            10 => Oracle,
            11 => Halt,
            12 => RegZ,
            13 => RegI,
            14 => Zero,
            15 => One,
            16 => Unary,
            17 => Bit0,
            18 => Bit1,
            _ => return None,
        })
    }
}

/// The normative symbol table as `(name, 5-bit code)` pairs.
pub fn symbol_table() -> &'static [(&'static str, u8)] {
    &[
        ("SEP", 0),
        ("ADD", 1),
        ("SUB", 2),
        ("SET", 3),
        ("EQ", 4),
        ("GE", 5),
        ("COPY", 6),
        ("IDXSET", 7),
        ("IDXINC", 8),
        ("IDXEQ", 9),
        ("ORACLE", 10),
        ("HALT", 11),
        ("REGZ", 12),
        ("REGI", 13),
        ("ZERO", 14),
        ("ONE", 15),
        ("UNARY", 16),
        ("BIT0", 17),
        ("BIT1", 18),
    ]
}

/// A nonempty finite 0/1 sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn from_bits(bits: Vec<bool>) -> Option<BitString> {
        if bits.is_empty() {
            None
        } else {
            Some(BitString(bits))
        }
    }

    pub fn from_binary_str(s: &str) -> Option<BitString> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return None,
            }
        }
        BitString::from_bits(bits)
    }

    /// Reads a code back from a tuple of exact 0/1 values.
    pub fn from_real_slice(values: &[RealValue]) -> Option<BitString> {
        let mut bits = Vec::with_capacity(values.len());
        for v in values {
            if v.is_zero_value() {
                bits.push(false);
            } else if *v == RealValue::one() {
                bits.push(true);
            } else {
                return None;
            }
        }
        BitString::from_bits(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// The code bits as a tuple of exact 0/1 values.
    pub fn to_real_tuple(&self) -> Vec<RealValue> {
        self.0
            .iter()
            .map(|&b| if b { RealValue::one() } else { RealValue::zero() })
            .collect()
    }

    /// `2^len + c` where `c` has this binary expansion; the offset keeps
    /// leading zeros significant, so the map to indices is injective.
    pub fn index(&self) -> BigUint {
        let mut k = BigUint::one();
        for &b in &self.0 {
            k <<= 1u8;
            if b {
                k += BigUint::one();
            }
        }
        k
    }

    /// Inverse of [`BitString::index`]; `None` for `k < 2`.
    pub fn from_index(k: &BigUint) -> Option<BitString> {
        if k < &BigUint::from(2u8) {
            return None;
        }
        let len = (k.bits() - 1) as usize;
        let mut bits = Vec::with_capacity(len);
        for pos in (0..len).rev() {
            bits.push(k.bit(pos as u64));
        }
        BitString::from_bits(bits)
    }

    pub fn to_binary_string(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Hex nibbles of the bit string, right-padded with zeros to a
    /// multiple of four bits.
    pub fn to_hex_string(&self) -> String {
        let mut out = String::new();
        for chunk in self.0.chunks(4) {
            let mut nibble = 0u8;
            for (i, &b) in chunk.iter().enumerate() {
                if b {
                    nibble |= 1 << (3 - i);
                }
            }
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_binary_string())
    }
}

/// A machine index `K = 2^|code| + c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GodelIndex(pub BigUint);

impl fmt::Display for GodelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("program constants must be 0 or 1 to be bit-encodable")]
    NonBinaryConstant,
}

fn push_subscript(out: &mut Vec<Sym>, n: u64) {
    debug_assert!(n >= 1);
    let len = 64 - n.leading_zeros() as usize;
    for _ in 0..len - 1 {
        out.push(Sym::Unary);
    }
    for pos in (0..len).rev() {
        out.push(if (n >> pos) & 1 == 1 { Sym::Bit1 } else { Sym::Bit0 });
    }
}

fn push_reg(out: &mut Vec<Sym>, marker: Sym, n: u32) {
    out.push(marker);
    push_subscript(out, n as u64);
}

fn instruction_symbols(instr: &Instruction, out: &mut Vec<Sym>) -> Result<(), EncodeError> {
    match instr {
        Instruction::AddReg { dst, lhs, rhs } | Instruction::SubReg { dst, lhs, rhs } => {
            out.push(if matches!(instr, Instruction::AddReg { .. }) {
                Sym::Add
            } else {
                Sym::Sub
            });
            push_reg(out, Sym::RegZ, *dst);
            push_reg(out, Sym::RegZ, *lhs);
            push_reg(out, Sym::RegZ, *rhs);
        }
        Instruction::SetConst { dst, value } => {
            let bit = if value.is_zero_value() {
                Sym::Zero
            } else if *value == RealValue::one() {
                Sym::One
            } else {
                return Err(EncodeError::NonBinaryConstant);
            };
            out.push(Sym::Set);
            push_reg(out, Sym::RegZ, *dst);
            out.push(bit);
        }
        Instruction::EqTest { reg, if_zero, otherwise } => {
            out.push(Sym::Eq);
            push_reg(out, Sym::RegZ, *reg);
            push_subscript(out, *if_zero as u64);
            push_subscript(out, *otherwise as u64);
        }
        Instruction::GeTest { reg, if_nonneg, otherwise } => {
            out.push(Sym::Ge);
            push_reg(out, Sym::RegZ, *reg);
            push_subscript(out, *if_nonneg as u64);
            push_subscript(out, *otherwise as u64);
        }
        Instruction::CopyIndirect { dst, src } => {
            out.push(Sym::Copy);
            push_reg(out, Sym::RegI, *dst);
            push_reg(out, Sym::RegI, *src);
        }
        Instruction::IndexSet { idx } => {
            out.push(Sym::IdxSet);
            push_reg(out, Sym::RegI, *idx);
        }
        Instruction::IndexInc { idx } => {
            out.push(Sym::IdxInc);
            push_reg(out, Sym::RegI, *idx);
        }
        Instruction::IndexTest { lhs, rhs, if_eq, otherwise } => {
            out.push(Sym::IdxEq);
            push_reg(out, Sym::RegI, *lhs);
            push_reg(out, Sym::RegI, *rhs);
            push_subscript(out, *if_eq as u64);
            push_subscript(out, *otherwise as u64);
        }
        Instruction::OracleTest { if_member, otherwise } => {
            out.push(Sym::Oracle);
            push_subscript(out, *if_member as u64);
            push_subscript(out, *otherwise as u64);
        }
        Instruction::Halt => out.push(Sym::Halt),
    }
    out.push(Sym::Sep);
    Ok(())
}

/// The bit code of a program. Injective on valid programs; fails only
/// when a `set` constant lies outside `{0, 1}`.
pub fn encode(program: &Program) -> Result<BitString, EncodeError> {
    let mut syms = Vec::new();
    for instr in program.instructions() {
        instruction_symbols(instr, &mut syms)?;
    }
    let mut bits = Vec::with_capacity(syms.len() * SYMBOL_WIDTH);
    for sym in syms {
        let code = sym as u8;
        for pos in (0..SYMBOL_WIDTH).rev() {
            bits.push((code >> pos) & 1 == 1);
        }
    }
    Ok(BitString::from_bits(bits).expect("programs are nonempty"))
}

struct SymReader {
    syms: Vec<Sym>,
    pos: usize,
}

impl SymReader {
    fn next(&mut self) -> Option<Sym> {
        let s = self.syms.get(self.pos).copied()?;
        self.pos += 1;
        Some(s)
    }

    fn expect(&mut self, s: Sym) -> Option<()> {
        if self.next()? == s {
            Some(())
        } else {
            None
        }
    }

    /// Unary-then-binary subscript; the leading digit must be 1.
    fn subscript(&mut self) -> Option<u64> {
        let mut extra = 0usize;
        let first = loop {
            match self.next()? {
                Sym::Unary => extra += 1,
                Sym::Bit1 => break true,
                Sym::Bit0 => return None, // non-canonical leading zero
                _ => return None,
            }
        };
        let mut value: u64 = first as u64;
        for _ in 0..extra {
            let bit = match self.next()? {
                Sym::Bit0 => 0u64,
                Sym::Bit1 => 1u64,
                _ => return None,
            };
            value = value.checked_mul(2)?.checked_add(bit)?;
        }
        Some(value)
    }

    fn reg(&mut self, marker: Sym) -> Option<u32> {
        self.expect(marker)?;
        let n = self.subscript()?;
        u32::try_from(n).ok()
    }

    fn label(&mut self) -> Option<Label> {
        let n = self.subscript()?;
        u32::try_from(n).ok()
    }
}

/// Decodes a bit string back into a program; `None` for every string
/// that is not the code of a structurally valid program.
pub fn decode(code: &BitString) -> Option<Program> {
    if !code.len().is_multiple_of(SYMBOL_WIDTH) {
        return None;
    }
    let mut syms = Vec::with_capacity(code.len() / SYMBOL_WIDTH);
    for chunk in code.bits().chunks(SYMBOL_WIDTH) {
        let mut v = 0u8;
        for &b in chunk {
            v = (v << 1) | b as u8;
        }
        syms.push(Sym::from_code(v)?);
    }
    let mut reader = SymReader { syms, pos: 0 };
    let mut instructions = Vec::new();
    while reader.pos < reader.syms.len() {
        let instr = match reader.next()? {
            Sym::Add | Sym::Sub => {
                let add = reader.syms[reader.pos - 1] == Sym::Add;
                let dst = reader.reg(Sym::RegZ)?;
                let lhs = reader.reg(Sym::RegZ)?;
                let rhs = reader.reg(Sym::RegZ)?;
                if add {
                    Instruction::AddReg { dst, lhs, rhs }
                } else {
                    Instruction::SubReg { dst, lhs, rhs }
                }
            }
            Sym::Set => {
                let dst: RegId = reader.reg(Sym::RegZ)?;
                let value = match reader.next()? {
                    Sym::Zero => RealValue::zero(),
                    Sym::One => RealValue::one(),
                    _ => return None,
                };
                Instruction::SetConst { dst, value }
            }
            Sym::Eq => Instruction::EqTest {
                reg: reader.reg(Sym::RegZ)?,
                if_zero: reader.label()?,
                otherwise: reader.label()?,
            },
            Sym::Ge => Instruction::GeTest {
                reg: reader.reg(Sym::RegZ)?,
                if_nonneg: reader.label()?,
                otherwise: reader.label()?,
            },
            Sym::Copy => Instruction::CopyIndirect {
                dst: reader.reg(Sym::RegI)?,
                src: reader.reg(Sym::RegI)?,
            },
            Sym::IdxSet => Instruction::IndexSet { idx: reader.reg(Sym::RegI)? },
            Sym::IdxInc => Instruction::IndexInc { idx: reader.reg(Sym::RegI)? },
            Sym::IdxEq => Instruction::IndexTest {
                lhs: reader.reg(Sym::RegI)?,
                rhs: reader.reg(Sym::RegI)?,
                if_eq: reader.label()?,
                otherwise: reader.label()?,
            },
            Sym::Oracle => Instruction::OracleTest {
                if_member: reader.label()?,
                otherwise: reader.label()?,
            },
            Sym::Halt => Instruction::Halt,
            _ => return None,
        };
        reader.expect(Sym::Sep)?;
        instructions.push(instr);
    }
    Program::new(instructions).ok()
}

/// The machine index of a program.
pub fn godel_index(program: &Program) -> Result<GodelIndex, EncodeError> {
    Ok(GodelIndex(encode(program)?.index()))
}

/// The program at index `k` when `k` is the code index of a valid
/// program admitted by `class`; `None` otherwise (the fill-in case).
pub fn decode_index(k: &BigUint, class: Dialect) -> Option<Program> {
    let bits = BitString::from_index(k)?;
    let program = decode(&bits)?;
    if class.admits(&program.dialect()) {
        Some(program)
    } else {
        None
    }
}

/// Total enumeration: the program at index `k`, with the trivial halt
/// machine filling every index that is not a valid code of the class.
pub fn machine_at(k: &BigUint, class: Dialect) -> Program {
    decode_index(k, class).unwrap_or_else(Program::trivial)
}

pub fn machine_at_u64(k: u64, class: Dialect) -> Program {
    machine_at(&BigUint::from(k), class)
}

/// The first `count` entries of the enumeration for a machine class.
pub fn enumerate_machines(class: Dialect, count: u64) -> Vec<(u64, Program)> {
    (1..=count).map(|k| (k, machine_at_u64(k, class))).collect()
}
