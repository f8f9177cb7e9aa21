//! Shared test support: seeded random program generation and a corpus
//! of small hand-built machines.

#![allow(dead_code)]

use addbss::machine::{parse_program, Instruction, Program};
use addbss::reals::RealValue;
use rand::Rng;

#[derive(Clone, Copy)]
pub struct GenConfig {
    pub max_len: usize,
    pub max_reg: u32,
    pub max_idx: u32,
    pub order_tests: bool,
    pub oracle: bool,
}

impl GenConfig {
    pub fn eq_dialect() -> Self {
        GenConfig { max_len: 12, max_reg: 5, max_idx: 2, order_tests: false, oracle: false }
    }

    pub fn ord_dialect() -> Self {
        GenConfig { max_len: 16, max_reg: 6, max_idx: 3, order_tests: true, oracle: false }
    }

    pub fn with_oracle() -> Self {
        GenConfig { oracle: true, ..Self::ord_dialect() }
    }
}

/// A structurally valid random program: all jump targets in range, the
/// last instruction never falls through, constants 0/1 only.
pub fn random_program(rng: &mut impl Rng, cfg: GenConfig) -> Program {
    let len = rng.gen_range(1..=cfg.max_len) as u32;
    let mut instrs = Vec::with_capacity(len as usize);
    for pos in 1..=len {
        let last = pos == len;
        let reg = |rng: &mut dyn rand::RngCore| rng.gen_range(1..=cfg.max_reg);
        let idx = |rng: &mut dyn rand::RngCore| rng.gen_range(1..=cfg.max_idx);
        let label = |rng: &mut dyn rand::RngCore| rng.gen_range(1..=len);
        let mut choices: Vec<u32> = vec![0, 1, 2, 3, 6, 7, 8];
        if cfg.order_tests {
            choices.push(4);
        }
        if cfg.oracle {
            choices.push(9);
        }
        choices.push(10);
        let pick = if last {
            // Must be a branch or halt.
            let mut branchy = vec![3u32, 8, 10];
            if cfg.order_tests {
                branchy.push(4);
            }
            if cfg.oracle {
                branchy.push(9);
            }
            branchy[rng.gen_range(0..branchy.len())]
        } else {
            choices[rng.gen_range(0..choices.len())]
        };
        let instr = match pick {
            0 => Instruction::AddReg { dst: reg(rng), lhs: reg(rng), rhs: reg(rng) },
            1 => Instruction::SubReg { dst: reg(rng), lhs: reg(rng), rhs: reg(rng) },
            2 => Instruction::SetConst {
                dst: reg(rng),
                value: if rng.gen_bool(0.5) { RealValue::zero() } else { RealValue::one() },
            },
            3 => Instruction::EqTest { reg: reg(rng), if_zero: label(rng), otherwise: label(rng) },
            4 => Instruction::GeTest {
                reg: reg(rng),
                if_nonneg: label(rng),
                otherwise: label(rng),
            },
            6 => Instruction::CopyIndirect { dst: idx(rng), src: idx(rng) },
            7 => Instruction::IndexSet { idx: idx(rng) },
            8 => Instruction::IndexTest {
                lhs: idx(rng),
                rhs: idx(rng),
                if_eq: label(rng),
                otherwise: label(rng),
            },
            9 => Instruction::OracleTest { if_member: label(rng), otherwise: label(rng) },
            _ => Instruction::Halt,
        };
        instrs.push(instr);
    }
    Program::new(instrs).expect("generated programs are structurally valid")
}

/// Twenty small eq-dialect machines with varied halting behavior.
pub fn eq_machine_corpus() -> Vec<Program> {
    let texts = [
        // Trivial.
        "1: halt",
        // Halts on even inputs only.
        "1: set Z2 = 1\n2: add Z2 = Z2 + Z2\n3: eq Z1 -> 6, 4\n4: sub Z1 = Z1 - Z2\n5: eq Z3 -> 3, 3\n6: halt",
        // Never halts.
        "1: eq Z9 -> 1, 1\n2: halt",
        // Halts iff input is zero (never, on positive integers).
        "1: eq Z1 -> 2, 3\n2: halt\n3: eq Z9 -> 3, 3\n4: halt",
        // Halts iff input = 3.
        "1: set Z2 = 1\n2: add Z3 = Z2 + Z2\n3: add Z3 = Z3 + Z2\n4: sub Z3 = Z1 - Z3\n5: eq Z3 -> 6, 7\n6: halt\n7: eq Z9 -> 7, 7\n8: halt",
        // Counts down by 1: halts on every positive integer, slowly.
        "1: set Z2 = 1\n2: eq Z1 -> 5, 3\n3: sub Z1 = Z1 - Z2\n4: eq Z9 -> 2, 2\n5: halt",
        // Halts on multiples of 3.
        "1: set Z2 = 1\n2: add Z2 = Z2 + Z2\n3: add Z2 = Z2 + Z2\n4: sub Z2 = Z2 - Z2\n5: set Z2 = 1\n6: add Z3 = Z2 + Z2\n7: add Z3 = Z3 + Z2\n8: eq Z1 -> 11, 9\n9: sub Z1 = Z1 - Z3\n10: eq Z9 -> 8, 8\n11: halt",
        // Doubles forever.
        "1: add Z1 = Z1 + Z1\n2: eq Z9 -> 1, 1\n3: halt",
        // Halts in two steps on anything.
        "1: set Z5 = 0\n2: halt",
        // Halts iff input = 1.
        "1: set Z2 = 1\n2: sub Z3 = Z1 - Z2\n3: eq Z3 -> 4, 5\n4: halt\n5: eq Z9 -> 5, 5\n6: halt",
        // Index-register walk, halts for every input.
        "1: idx I2 = 1\n2: ieq I1, I2 -> 5, 3\n3: inc I2\n4: eq Z9 -> 2, 2\n5: halt",
        // Copy shuffle then halt.
        "1: idx I2 = 1\n2: copy Z[I1] = Z[I2]\n3: halt",
        // Halts iff input = 2 or 4.
        "1: set Z2 = 1\n2: add Z2 = Z2 + Z2\n3: sub Z3 = Z1 - Z2\n4: eq Z3 -> 9, 5\n5: add Z4 = Z2 + Z2\n6: sub Z3 = Z1 - Z4\n7: eq Z3 -> 9, 8\n8: eq Z9 -> 8, 8\n9: halt",
        // Subtracts 4 repeatedly.
        "1: set Z2 = 1\n2: add Z2 = Z2 + Z2\n3: add Z2 = Z2 + Z2\n4: eq Z1 -> 7, 5\n5: sub Z1 = Z1 - Z2\n6: eq Z9 -> 4, 4\n7: halt",
        // Builds a constant then halts.
        "1: set Z2 = 1\n2: add Z2 = Z2 + Z2\n3: add Z2 = Z2 + Z2\n4: add Z2 = Z2 + Z2\n5: halt",
        // Halts after a fixed 6-step dance regardless of input.
        "1: set Z2 = 1\n2: add Z3 = Z2 + Z2\n3: sub Z3 = Z3 - Z2\n4: eq Z5 -> 5, 5\n5: add Z4 = Z3 + Z3\n6: halt",
        // Erases the input then halts.
        "1: sub Z1 = Z1 - Z1\n2: halt",
        // Halts iff input is odd (n - 1 reaches 0 by steps of 2).
        "1: set Z2 = 1\n2: sub Z1 = Z1 - Z2\n3: add Z2 = Z2 + Z2\n4: eq Z1 -> 7, 5\n5: sub Z1 = Z1 - Z2\n6: eq Z9 -> 4, 4\n7: halt",
        // Wide fan of equality gates.
        "1: eq Z1 -> 2, 3\n2: halt\n3: eq Z2 -> 4, 5\n4: halt\n5: eq Z3 -> 6, 7\n6: halt\n7: halt",
        // Long linear chain.
        "1: set Z2 = 1\n2: add Z3 = Z2 + Z2\n3: add Z4 = Z3 + Z3\n4: add Z5 = Z4 + Z4\n5: sub Z5 = Z5 - Z2\n6: add Z5 = Z5 + Z2\n7: halt",
    ];
    texts.iter().map(|t| parse_program(t).expect("corpus parses")).collect()
}

pub fn rv(n: i64) -> RealValue {
    RealValue::from_integer(n)
}
