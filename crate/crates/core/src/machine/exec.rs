//! Single-step operational semantics and bounded runs.
//!
//! Every executed instruction costs exactly one step, oracle tests and
//! `halt` included, so "halts within t steps" is well defined and a run
//! paused at `t1` steps and resumed for `t2` more is indistinguishable
//! from a single run of `t1 + t2` steps.

use std::cmp::Ordering;

use serde::Serialize;

use super::{
    init_state, Instruction, Label, MachineError, MachineState, OracleSpec, Program,
};
use crate::reals::RealValue;

/// Which storage cell an instruction wrote.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Z(u64),
    I(u32),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Z(r) => write!(f, "Z{}", r),
            Cell::I(j) => write!(f, "I{}", j),
        }
    }
}

/// What a single step did, for tracing and query collection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepNote {
    Assigned { cell: Cell },
    Branched { taken: Label },
    OracleQueried { tuple: Vec<RealValue>, member: bool, taken: Label },
    Halted { output: Vec<RealValue> },
}

fn combine_cells(a: Option<&RealValue>, b: Option<&RealValue>, subtract: bool) -> RealValue {
    match (a, b) {
        (None, None) => RealValue::zero(),
        (Some(a), None) => a.clone(),
        (None, Some(b)) => {
            if subtract {
                -b
            } else {
                b.clone()
            }
        }
        (Some(a), Some(b)) => {
            if subtract {
                a - b
            } else {
                a + b
            }
        }
    }
}

/// Executes exactly one instruction, mutating the state in place.
pub fn step(
    state: &mut MachineState,
    program: &Program,
    oracle: Option<&OracleSpec>,
) -> Result<StepNote, MachineError> {
    let pc = state.pc();
    let instr = program
        .instruction_at(pc)
        .ok_or(MachineError::InvalidPc { pc })?;
    state.bump_steps();
    let note = match instr {
        Instruction::AddReg { dst, lhs, rhs } => {
            let v = combine_cells(
                state.register_ref(*lhs as u64),
                state.register_ref(*rhs as u64),
                false,
            );
            state.set_register(*dst as u64, v);
            state.set_pc(pc + 1);
            StepNote::Assigned { cell: Cell::Z(*dst as u64) }
        }
        Instruction::SubReg { dst, lhs, rhs } => {
            let v = combine_cells(
                state.register_ref(*lhs as u64),
                state.register_ref(*rhs as u64),
                true,
            );
            state.set_register(*dst as u64, v);
            state.set_pc(pc + 1);
            StepNote::Assigned { cell: Cell::Z(*dst as u64) }
        }
        Instruction::SetConst { dst, value } => {
            state.set_register(*dst as u64, value.clone());
            state.set_pc(pc + 1);
            StepNote::Assigned { cell: Cell::Z(*dst as u64) }
        }
        Instruction::EqTest { reg, if_zero, otherwise } => {
            let zero = match state.register_ref(*reg as u64) {
                None => true,
                Some(v) => v.sign() == Ordering::Equal,
            };
            let taken = if zero { *if_zero } else { *otherwise };
            state.set_pc(taken);
            StepNote::Branched { taken }
        }
        Instruction::GeTest { reg, if_nonneg, otherwise } => {
            let nonneg = match state.register_ref(*reg as u64) {
                None => true,
                Some(v) => v.sign() != Ordering::Less,
            };
            let taken = if nonneg { *if_nonneg } else { *otherwise };
            state.set_pc(taken);
            StepNote::Branched { taken }
        }
        Instruction::CopyIndirect { dst, src } => {
            let from = state.index_register(*src);
            let to = state.index_register(*dst);
            let v = state
                .register_ref(from)
                .cloned()
                .unwrap_or_else(RealValue::zero);
            state.set_register(to, v);
            state.set_pc(pc + 1);
            StepNote::Assigned { cell: Cell::Z(to) }
        }
        Instruction::IndexSet { idx } => {
            state.set_index(*idx, 1);
            state.set_pc(pc + 1);
            StepNote::Assigned { cell: Cell::I(*idx) }
        }
        Instruction::IndexInc { idx } => {
            let v = state.index_register(*idx) + 1;
            state.set_index(*idx, v);
            state.set_pc(pc + 1);
            StepNote::Assigned { cell: Cell::I(*idx) }
        }
        Instruction::IndexTest { lhs, rhs, if_eq, otherwise } => {
            let taken = if state.index_register(*lhs) == state.index_register(*rhs) {
                *if_eq
            } else {
                *otherwise
            };
            state.set_pc(taken);
            StepNote::Branched { taken }
        }
        Instruction::OracleTest { if_member, otherwise } => {
            let oracle = oracle.ok_or(MachineError::OracleMissing { at: pc })?;
            let tuple = state.front_tuple();
            let member = oracle.decide(&tuple);
            let taken = if member { *if_member } else { *otherwise };
            state.set_pc(taken);
            StepNote::OracleQueried { tuple, member, taken }
        }
        Instruction::Halt => StepNote::Halted { output: state.front_tuple() },
    };
    Ok(note)
}

/// Result of a budgeted run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    /// Halted after exactly `steps` instructions (the `halt` included).
    Halted { steps: u64, output: Vec<RealValue> },
    /// Budget exhausted; the state supports exact resumption.
    Running(MachineState),
}

impl RunOutcome {
    pub fn halted(&self) -> bool {
        matches!(self, RunOutcome::Halted { .. })
    }

    pub fn halted_at(&self) -> Option<u64> {
        match self {
            RunOutcome::Halted { steps, .. } => Some(*steps),
            RunOutcome::Running(_) => None,
        }
    }
}

/// Continues a paused state for at most `budget` further steps.
pub fn resume(
    mut state: MachineState,
    program: &Program,
    oracle: Option<&OracleSpec>,
    budget: u64,
) -> Result<RunOutcome, MachineError> {
    for _ in 0..budget {
        match step(&mut state, program, oracle)? {
            StepNote::Halted { output } => {
                return Ok(RunOutcome::Halted { steps: state.steps(), output })
            }
            _ => continue,
        }
    }
    Ok(RunOutcome::Running(state))
}

/// Runs a program on an input for at most `budget` steps.
pub fn run_bounded(
    program: &Program,
    input: &[RealValue],
    oracle: Option<&OracleSpec>,
    budget: u64,
) -> Result<RunOutcome, MachineError> {
    let state = init_state(program, input)?;
    resume(state, program, oracle, budget)
}

/// One emitted line per executed step.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TraceEntry {
    pub step: u64,
    pub label: Label,
    pub instr: String,
    pub changed_cell: Option<String>,
    pub value: Option<String>,
}

/// Runs with a full step-by-step trace. Branch steps report no cell;
/// oracle steps report the verdict as `in`/`out`.
pub fn run_traced(
    program: &Program,
    input: &[RealValue],
    oracle: Option<&OracleSpec>,
    budget: u64,
) -> Result<(RunOutcome, Vec<TraceEntry>), MachineError> {
    let mut state = init_state(program, input)?;
    let mut trace = Vec::new();
    for _ in 0..budget {
        let label = state.pc();
        let instr = program
            .instruction_at(label)
            .ok_or(MachineError::InvalidPc { pc: label })?
            .to_string();
        let note = step(&mut state, program, oracle)?;
        let (changed_cell, value) = match &note {
            StepNote::Assigned { cell } => {
                let text = match cell {
                    Cell::Z(r) => state.register(*r).to_string(),
                    Cell::I(j) => state.index_register(*j).to_string(),
                };
                (Some(cell.to_string()), Some(text))
            }
            StepNote::Branched { .. } => (None, None),
            StepNote::OracleQueried { member, .. } => {
                (None, Some(if *member { "in" } else { "out" }.to_string()))
            }
            StepNote::Halted { .. } => (None, None),
        };
        trace.push(TraceEntry {
            step: state.steps(),
            label,
            instr,
            changed_cell,
            value,
        });
        if let StepNote::Halted { output } = note {
            return Ok((RunOutcome::Halted { steps: state.steps(), output }, trace));
        }
    }
    Ok((RunOutcome::Running(state), trace))
}

/// The sequence of labels executed (at most `budget` of them); stops
/// early on halt. Two inputs traverse the same computation path prefix
/// exactly when their label sequences agree.
pub fn label_sequence(
    program: &Program,
    input: &[RealValue],
    oracle: Option<&OracleSpec>,
    budget: u64,
) -> Result<Vec<Label>, MachineError> {
    let mut state = init_state(program, input)?;
    let mut labels = Vec::new();
    for _ in 0..budget {
        labels.push(state.pc());
        if let StepNote::Halted { .. } = step(&mut state, program, oracle)? {
            break;
        }
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::parse_program;
    use crate::reals::RealValue;

    fn rv(n: i64) -> RealValue {
        RealValue::from_integer(n)
    }

    #[test]
    fn init_convention() {
        let p = parse_program("1: inc I2\n2: halt").unwrap();
        assert_eq!(p.index_registers(), 2);
        let s = init_state(&p, &[rv(5)]).unwrap();
        assert_eq!(s.register(1), rv(5));
        assert_eq!(s.index_values(), &[1, 1]);
        assert_eq!(s.pc(), 1);
        assert_eq!(s.steps(), 0);

        let s3 = init_state(&p, &[rv(1), rv(2), rv(3)]).unwrap();
        assert_eq!(s3.index_values(), &[3, 3]);

        assert_eq!(init_state(&p, &[]), Err(MachineError::EmptyInput));
    }

    #[test]
    fn eq_branches_on_exact_sign() {
        let p = parse_program("1: eq Z1 -> 2, 3\n2: halt\n3: halt").unwrap();
        let mut s = init_state(&p, &[RealValue::sqrt_prime(1)]).unwrap();
        let note = step(&mut s, &p, None).unwrap();
        assert_eq!(note, StepNote::Branched { taken: 3 });

        let mut s0 = init_state(&p, &[rv(0)]).unwrap();
        assert_eq!(step(&mut s0, &p, None).unwrap(), StepNote::Branched { taken: 2 });
    }

    #[test]
    fn ge_on_zero_is_true() {
        let p = parse_program("1: ge Z1 -> 2, 3\n2: halt\n3: halt").unwrap();
        let mut s = init_state(&p, &[rv(0)]).unwrap();
        assert_eq!(step(&mut s, &p, None).unwrap(), StepNote::Branched { taken: 2 });
    }

    #[test]
    fn oracle_query_tuple_and_branch() {
        // Membership: pairs of naturals with first >= second.
        let o = OracleSpec::new("ge-pairs", |t: &[RealValue]| {
            if t.len() != 2 {
                return false;
            }
            match (t[0].as_integer(), t[1].as_integer()) {
                (Some(a), Some(b)) => a >= b,
                _ => false,
            }
        });
        let p = parse_program("1: oracle -> 2, 3\n2: halt\n3: halt").unwrap();
        let mut s = init_state(&p, &[rv(3), rv(4)]).unwrap();
        let note = step(&mut s, &p, Some(&o)).unwrap();
        assert_eq!(
            note,
            StepNote::OracleQueried { tuple: vec![rv(3), rv(4)], member: false, taken: 3 }
        );

        let mut s2 = init_state(&p, &[rv(4), rv(3)]).unwrap();
        assert_eq!(
            step(&mut s2, &p, Some(&o)).unwrap(),
            StepNote::OracleQueried { tuple: vec![rv(4), rv(3)], member: true, taken: 2 }
        );

        let mut s3 = init_state(&p, &[rv(1), rv(2)]).unwrap();
        assert_eq!(
            step(&mut s3, &p, None),
            Err(MachineError::OracleMissing { at: 1 })
        );
    }

    #[test]
    fn run_bounded_examples() {
        let halt = Program::trivial();
        match run_bounded(&halt, &[rv(9)], None, 1).unwrap() {
            RunOutcome::Halted { steps, output } => {
                assert_eq!(steps, 1);
                assert_eq!(output, vec![rv(9)]);
            }
            _ => panic!("trivial machine must halt in one step"),
        }

        let looper = parse_program("1: eq Z2 -> 1, 1\n2: halt").unwrap();
        assert!(matches!(
            run_bounded(&looper, &[rv(1)], None, 1000).unwrap(),
            RunOutcome::Running(_)
        ));

        let doubling = parse_program("1: add Z1 = Z1 + Z1\n2: halt").unwrap();
        match run_bounded(&doubling, &[rv(3)], None, 10).unwrap() {
            RunOutcome::Halted { steps, output } => {
                assert_eq!(steps, 2);
                assert_eq!(output, vec![rv(6)]);
            }
            _ => panic!("doubling program must halt"),
        }
    }

    #[test]
    fn resumption_matches_straight_run() {
        let p = parse_program(
            "1: add Z2 = Z2 + Z1\n2: sub Z1 = Z1 - Z3\n3: eq Z1 -> 5, 4\n4: eq Z4 -> 1, 1\n5: halt",
        )
        .unwrap();
        let input = [rv(4)];
        let full = run_bounded(&p, &input, None, 9).unwrap();
        let part = run_bounded(&p, &input, None, 4).unwrap();
        let resumed = match part {
            RunOutcome::Running(s) => resume(s, &p, None, 5).unwrap(),
            _ => panic!("must still be running after 4 steps"),
        };
        assert_eq!(full, resumed);
    }

    #[test]
    fn copy_indirect_moves_cells() {
        let p = parse_program("1: copy Z[I1] = Z[I2]\n2: halt").unwrap();
        // Input (7, 0): I1 = I2 = 2, so Z2 := Z2 — identity.
        let mut s = init_state(&p, &[rv(7), rv(1)]).unwrap();
        step(&mut s, &p, None).unwrap();
        assert_eq!(s.register(2), rv(1));

        // idx/inc reroute the copy: Z3 := Z1.
        let p2 = parse_program(
            "1: idx I2 = 1\n2: inc I1\n3: copy Z[I1] = Z[I2]\n4: halt",
        )
        .unwrap();
        match run_bounded(&p2, &[rv(7), rv(9)], None, 10).unwrap() {
            RunOutcome::Halted { output, .. } => {
                // I1 = 3 at halt, so the output tuple is (Z1, Z2, Z3).
                assert_eq!(output, vec![rv(7), rv(9), rv(7)]);
            }
            _ => panic!("must halt"),
        }
    }

    #[test]
    fn trace_lines_are_exact() {
        let p = parse_program("1: add Z1 = Z1 + Z1\n2: halt").unwrap();
        let (outcome, trace) = run_traced(&p, &[rv(3)], None, 10).unwrap();
        assert_eq!(outcome.halted_at(), Some(2));
        assert_eq!(trace.len(), 2);
        assert_eq!(trace[0].step, 1);
        assert_eq!(trace[0].label, 1);
        assert_eq!(trace[0].instr, "add Z1 = Z1 + Z1");
        assert_eq!(trace[0].changed_cell.as_deref(), Some("Z1"));
        assert_eq!(trace[0].value.as_deref(), Some("6"));
        assert_eq!(trace[1].instr, "halt");
    }
}
