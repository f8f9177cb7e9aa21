//! Effective enumeration of halting behavior over the positive integers.
//!
//! For an oracle-free machine, the pairs `(n, t)` with "halts on input
//! `n` after exactly `t` steps" are enumerated by dovetailing: round `r`
//! simulates inputs `n <= r` for up to `r` steps and emits the newly
//! discovered exact halts ordered by `(t, n)`. The emitted sequence is a
//! prefix of one fixed infinite enumeration, so enlarging the budget
//! only appends. `W_{i,s}` is the set of inputs discovered for the i-th
//! eq-dialect machine within `s` rounds, which makes the snapshots
//! monotone in `s` by construction.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::Serialize;

use crate::encoding::{machine_at, machine_at_u64};
use crate::machine::{
    init_state, resume, run_bounded, Dialect, DialectBase, MachineState, OracleSpec, Program,
    RunOutcome,
};
use crate::reals::RealValue;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimulationError {
    #[error("halting-pair enumeration requires an oracle-free program")]
    OracleInstructions,
}

/// `(n, t)`: the machine halts on input `n` after exactly `t` steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HaltingPair {
    pub n: u64,
    pub t: u64,
}

/// `W_{i,s}`: members of machine i's halting set discovered within `s`
/// dovetail rounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnumerationSnapshot {
    pub i: u64,
    pub s: u64,
    pub members: BTreeSet<u64>,
}

/// Resumable dovetail over inputs `1, 2, 3, ...`.
pub struct Dovetailer {
    program: Program,
    round: u64,
    running: Vec<(u64, MachineState)>,
    emitted: Vec<HaltingPair>,
}

impl Dovetailer {
    pub fn new(program: Program) -> Result<Dovetailer, SimulationError> {
        if program.dialect().oracle {
            return Err(SimulationError::OracleInstructions);
        }
        Ok(Dovetailer { program, round: 0, running: Vec::new(), emitted: Vec::new() })
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// All pairs emitted so far, in canonical order.
    pub fn emitted(&self) -> &[HaltingPair] {
        &self.emitted
    }

    /// Executes one more round; returns how many pairs it emitted.
    pub fn advance_round(&mut self) -> usize {
        self.round += 1;
        let r = self.round;
        let mut fresh: Vec<HaltingPair> = Vec::new();
        let mut still_running = Vec::with_capacity(self.running.len() + 1);
        for (n, state) in self.running.drain(..) {
            match resume(state, &self.program, None, 1).expect("oracle-free run cannot fail") {
                RunOutcome::Halted { steps, .. } => fresh.push(HaltingPair { n, t: steps }),
                RunOutcome::Running(s) => still_running.push((n, s)),
            }
        }
        // Input r enters the dovetail with the full r-step allowance.
        let input = [RealValue::from_rational(BigRational::from_integer(BigInt::from(r)))];
        match run_bounded(&self.program, &input, None, r).expect("oracle-free run cannot fail") {
            RunOutcome::Halted { steps, .. } => fresh.push(HaltingPair { n: r, t: steps }),
            RunOutcome::Running(s) => still_running.push((r, s)),
        }
        self.running = still_running;
        fresh.sort_by_key(|p| (p.t, p.n));
        let count = fresh.len();
        self.emitted.extend(fresh);
        count
    }

    pub fn advance_to_round(&mut self, rounds: u64) {
        while self.round < rounds {
            self.advance_round();
        }
    }
}

/// The first pairs of the canonical enumeration, up to `rounds` rounds.
pub fn enumerate_halting_pairs(
    program: &Program,
    rounds: u64,
) -> Result<Vec<HaltingPair>, SimulationError> {
    let mut d = Dovetailer::new(program.clone())?;
    d.advance_to_round(rounds);
    Ok(d.emitted)
}

/// Output of the enumerator for the i-th eq-dialect machine on input
/// `j`: the j-th enumerated halting input, if the dovetail reaches it
/// within the round budget.
pub fn nbar_output(i: u64, j: u64, rounds: u64) -> Option<u64> {
    assert!(i >= 1 && j >= 1);
    let program = machine_at_u64(i, Dialect::ADD_EQ);
    let pairs = enumerate_halting_pairs(&program, rounds).expect("eq-dialect machines lack oracles");
    pairs.get(j as usize - 1).map(|p| p.n)
}

/// `W_{i,s}` for the genuine machine enumeration.
pub fn snapshot_w(i: u64, s: u64) -> EnumerationSnapshot {
    assert!(i >= 1 && s >= 1);
    let program = machine_at_u64(i, Dialect::ADD_EQ);
    let pairs = enumerate_halting_pairs(&program, s).expect("eq-dialect machines lack oracles");
    EnumerationSnapshot { i, s, members: pairs.into_iter().map(|p| p.n).collect() }
}

/// Outcome of a bounded diagonal run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagonalOutcome {
    YesAt(u64),
    NotWithin,
}

/// Runs the k-th oracle machine on input `(k)` with the given oracle
/// for at most `budget` steps.
pub fn diagonal_halts(k: &BigUint, oracle: &OracleSpec, budget: u64) -> DiagonalOutcome {
    let program = machine_at(k, Dialect::with_oracle(DialectBase::AddOrd));
    let input = [RealValue::from_rational(BigRational::from_integer(BigInt::from(k.clone())))];
    let state = init_state(&program, &input).expect("nonempty input");
    match resume(state, &program, Some(oracle), budget) {
        Ok(RunOutcome::Halted { steps, .. }) => DiagonalOutcome::YesAt(steps),
        Ok(RunOutcome::Running(_)) => DiagonalOutcome::NotWithin,
        // A query reached an instruction needing an absent oracle; with
        // an oracle always attached here this cannot happen.
        Err(_) => unreachable!("oracle is always attached to diagonal runs"),
    }
}

pub fn diagonal_halts_u64(k: u64, oracle: &OracleSpec, budget: u64) -> DiagonalOutcome {
    diagonal_halts(&BigUint::from(k), oracle, budget)
}
