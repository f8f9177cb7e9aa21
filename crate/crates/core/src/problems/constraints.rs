//! Affine path constraints for single-input runs and rational shadows.
//!
//! On a single input `x`, a machine with constants 0 and 1 keeps every
//! register of the form `k*x + l` with integer `k, l`. Executing a path
//! therefore pins down a system of sign conditions (and oracle
//! membership conditions with affine arguments) that an input satisfies
//! exactly when it traverses the same path prefix. `rational_shadow_search`
//! exploits this: around an irrational target every strict condition
//! keeps a positive exact margin, so a close enough rational — found by
//! interval refinement and a minimal-denominator pick — follows the
//! identical branches.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;

use crate::machine::{
    init_state, Instruction, Label, MachineError, MachineState, OracleSpec, Program,
};
use crate::reals::{refine_interval, GeneratorId, RealValue};

/// `k*x + l` with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineTerm {
    pub k: BigInt,
    pub l: BigInt,
}

impl AffineTerm {
    pub fn zero() -> Self {
        AffineTerm { k: BigInt::zero(), l: BigInt::zero() }
    }

    pub fn input() -> Self {
        AffineTerm { k: BigInt::one(), l: BigInt::zero() }
    }

    pub fn constant(l: BigInt) -> Self {
        AffineTerm { k: BigInt::zero(), l }
    }

    fn add(&self, other: &AffineTerm) -> AffineTerm {
        AffineTerm { k: &self.k + &other.k, l: &self.l + &other.l }
    }

    fn sub(&self, other: &AffineTerm) -> AffineTerm {
        AffineTerm { k: &self.k - &other.k, l: &self.l - &other.l }
    }

    fn neg(&self) -> AffineTerm {
        AffineTerm { k: -self.k.clone(), l: -self.l.clone() }
    }

    pub fn eval_rational(&self, q: &BigRational) -> BigRational {
        BigRational::from_integer(self.k.clone()) * q + BigRational::from_integer(self.l.clone())
    }

    pub fn eval_value(&self, x: &RealValue) -> RealValue {
        let scaled = x.scale(&BigRational::from_integer(self.k.clone()));
        &scaled + &RealValue::from_rational(BigRational::from_integer(self.l.clone()))
    }
}

impl std::fmt::Display for AffineTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}*x + {}", self.k, self.l)
    }
}

/// The sign condition an executed test imposed on `k*x + l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignCondition {
    Ge,
    Gt,
    Eq,
    Ne,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Sign { term: AffineTerm, condition: SignCondition },
    Oracle { args: Vec<AffineTerm>, member: bool },
}

/// The conditions characterizing one traversed path prefix.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub atoms: Vec<Atom>,
    pub program: Program,
    /// Labels of the executed instructions, in order.
    pub path: Vec<Label>,
    pub steps: u64,
    pub target: RealValue,
}

impl ConstraintSystem {
    /// Does the rational `q` satisfy every recorded condition? Oracle
    /// atoms need the same oracle the extraction ran against.
    pub fn satisfied_by(&self, q: &BigRational, oracle: Option<&OracleSpec>) -> bool {
        self.atoms.iter().all(|atom| match atom {
            Atom::Sign { term, condition } => {
                let v = term.eval_rational(q);
                match condition {
                    SignCondition::Ge => !v.is_negative(),
                    SignCondition::Gt => v.is_positive(),
                    SignCondition::Eq => v.is_zero(),
                    SignCondition::Ne => !v.is_zero(),
                }
            }
            Atom::Oracle { args, member } => {
                let Some(oracle) = oracle else { return false };
                let tuple: Vec<RealValue> = args
                    .iter()
                    .map(|t| RealValue::from_rational(t.eval_rational(q)))
                    .collect();
                oracle.decide(&tuple) == *member
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("symbolic input must be a rational or a single generator")]
    InvalidTarget,
    #[error("register left the integer-affine form at label {at}")]
    SymbolicOverflow { at: Label },
    #[error(transparent)]
    Machine(#[from] MachineError),
}

fn affine_of_cell(regs: &std::collections::BTreeMap<u64, AffineTerm>, r: u64) -> AffineTerm {
    regs.get(&r).cloned().unwrap_or_else(AffineTerm::zero)
}

fn target_is_symbolic(target: &RealValue) -> bool {
    if target.is_rational() {
        return true;
    }
    let coeffs: Vec<_> = target.coeffs().collect();
    target.constant().is_zero() && coeffs.len() == 1 && coeffs[0].1 == &BigRational::one()
}

/// Runs up to `max_steps` instructions on the single symbolic input,
/// tracking every register as `k*x + l` and recording the condition
/// each executed test actually satisfied at the target.
pub fn extract_path_constraints(
    program: &Program,
    target: &RealValue,
    oracle: Option<&OracleSpec>,
    max_steps: u64,
) -> Result<ConstraintSystem, ConstraintError> {
    if !target_is_symbolic(target) {
        return Err(ConstraintError::InvalidTarget);
    }
    // The concrete state keeps the index registers and step budget
    // honest; real registers are shadowed by affine terms.
    let mut state: MachineState = init_state(program, std::slice::from_ref(target))?;
    let mut regs = std::collections::BTreeMap::new();
    regs.insert(1u64, AffineTerm::input());
    let mut atoms = Vec::new();
    let mut path = Vec::new();

    let mut steps = 0u64;
    while steps < max_steps {
        let pc = state.pc();
        let instr = program
            .instruction_at(pc)
            .ok_or(MachineError::InvalidPc { pc })?;
        path.push(pc);
        steps += 1;
        match instr {
            Instruction::AddReg { dst, lhs, rhs } => {
                let v = affine_of_cell(&regs, *lhs as u64).add(&affine_of_cell(&regs, *rhs as u64));
                regs.insert(*dst as u64, v);
                state.set_pc(pc + 1);
            }
            Instruction::SubReg { dst, lhs, rhs } => {
                let v = affine_of_cell(&regs, *lhs as u64).sub(&affine_of_cell(&regs, *rhs as u64));
                regs.insert(*dst as u64, v);
                state.set_pc(pc + 1);
            }
            Instruction::SetConst { dst, value } => {
                let Some(n) = value.as_integer() else {
                    return Err(ConstraintError::SymbolicOverflow { at: pc });
                };
                regs.insert(*dst as u64, AffineTerm::constant(n));
                state.set_pc(pc + 1);
            }
            Instruction::EqTest { reg, if_zero, otherwise } => {
                let term = affine_of_cell(&regs, *reg as u64);
                let sign = term.eval_value(target).sign();
                let (condition, taken) = if sign == Ordering::Equal {
                    (SignCondition::Eq, *if_zero)
                } else {
                    (SignCondition::Ne, *otherwise)
                };
                atoms.push(Atom::Sign { term, condition });
                state.set_pc(taken);
            }
            Instruction::GeTest { reg, if_nonneg, otherwise } => {
                let term = affine_of_cell(&regs, *reg as u64);
                let sign = term.eval_value(target).sign();
                if sign != Ordering::Less {
                    atoms.push(Atom::Sign { term, condition: SignCondition::Ge });
                    state.set_pc(*if_nonneg);
                } else {
                    // The failed test asserts -(k*x + l) > 0.
                    atoms.push(Atom::Sign { term: term.neg(), condition: SignCondition::Gt });
                    state.set_pc(*otherwise);
                }
            }
            Instruction::CopyIndirect { dst, src } => {
                let from = state.index_register(*src);
                let to = state.index_register(*dst);
                let v = affine_of_cell(&regs, from);
                regs.insert(to, v);
                state.set_pc(pc + 1);
            }
            Instruction::IndexSet { idx } => {
                state.set_index(*idx, 1);
                state.set_pc(pc + 1);
            }
            Instruction::IndexInc { idx } => {
                let v = state.index_register(*idx) + 1;
                state.set_index(*idx, v);
                state.set_pc(pc + 1);
            }
            Instruction::IndexTest { lhs, rhs, if_eq, otherwise } => {
                // Index registers never depend on the real input, so no
                // atom is recorded.
                let taken = if state.index_register(*lhs) == state.index_register(*rhs) {
                    *if_eq
                } else {
                    *otherwise
                };
                state.set_pc(taken);
            }
            Instruction::OracleTest { if_member, otherwise } => {
                let oracle = oracle.ok_or(MachineError::OracleMissing { at: pc })?;
                let args: Vec<AffineTerm> = (1..=state.index_register(1))
                    .map(|r| affine_of_cell(&regs, r))
                    .collect();
                let tuple: Vec<RealValue> =
                    args.iter().map(|t| t.eval_value(target)).collect();
                let member = oracle.decide(&tuple);
                atoms.push(Atom::Oracle { args, member });
                state.set_pc(if member { *if_member } else { *otherwise });
            }
            Instruction::Halt => break,
        }
    }
    Ok(ConstraintSystem {
        atoms,
        program: program.clone(),
        path,
        steps,
        target: target.clone(),
    })
}

/// The rational with the smallest denominator in the closed interval
/// `[lo, hi]` (ties broken toward the value closest to zero).
pub fn simplest_rational_between(lo: &BigRational, hi: &BigRational) -> BigRational {
    assert!(lo <= hi);
    if lo.is_positive() {
        simplest_positive(lo, hi)
    } else if hi.is_negative() {
        -simplest_positive(&-hi.clone(), &-lo.clone())
    } else {
        BigRational::zero()
    }
}

fn simplest_positive(lo: &BigRational, hi: &BigRational) -> BigRational {
    // 0 < lo <= hi. If an integer fits, it has denominator 1.
    let ceil_lo = lo.ceil();
    if &ceil_lo <= hi {
        return ceil_lo;
    }
    let a = lo.floor();
    // No integer inside: continued-fraction descent on reciprocals.
    let inner = simplest_positive(
        &(BigRational::one() / (hi - &a)),
        &(BigRational::one() / (lo - &a)),
    );
    a + BigRational::one() / inner
}

/// Exact positive lower bound of `|v|` for nonzero `v`, by refining the
/// interval hull until it excludes zero.
fn positive_gap_bound(v: &RealValue) -> BigRational {
    if let Some(q) = v.as_rational() {
        assert!(!q.is_zero());
        return q.abs();
    }
    let mut width = BigRational::one();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    loop {
        let hull = v.interval_hull(&width);
        if hull.lo.is_positive() {
            return hull.lo;
        }
        if hull.hi.is_negative() {
            return -hull.hi;
        }
        width *= &half;
    }
}

fn target_generator(target: &RealValue) -> Option<GeneratorId> {
    let coeffs: Vec<_> = target.coeffs().collect();
    if target.constant().is_zero() && coeffs.len() == 1 && coeffs[0].1 == &BigRational::one() {
        Some(*coeffs[0].0)
    } else {
        None
    }
}

/// Searches for a rational that follows the same path prefix as the
/// irrational target: every strict condition of the extracted system
/// holds with an exact margin, so any rational within the derived
/// radius satisfies them all; the returned witness is the minimal-
/// denominator rational inside the refined target interval, `None` if
/// that denominator exceeds the cap (or an equality on the input was
/// recorded, which no rational shadow of an irrational can satisfy).
pub fn rational_shadow_search(
    program: &Program,
    target: &RealValue,
    oracle: Option<&OracleSpec>,
    max_steps: u64,
    denominator_bound: &BigUint,
) -> Option<BigRational> {
    let generator = target_generator(target)?;
    let system = extract_path_constraints(program, target, oracle, max_steps).ok()?;
    let mut radius = BigRational::one();
    for atom in &system.atoms {
        let Atom::Sign { term, condition } = atom else { continue };
        if term.k.is_zero() {
            continue;
        }
        if *condition == SignCondition::Eq {
            return None;
        }
        let gap = positive_gap_bound(&term.eval_value(target));
        let candidate = gap / BigRational::from_integer(term.k.abs());
        if candidate < radius {
            radius = candidate;
        }
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut width = radius * &half;
    for _ in 0..64 {
        let interval = refine_interval(generator, &width);
        let q = simplest_rational_between(&interval.lo, &interval.hi);
        if q.denom().magnitude() > denominator_bound {
            return None;
        }
        if system.satisfied_by(&q, oracle) {
            return Some(q);
        }
        // Only oracle conditions can fail here; retry closer in.
        width *= &half;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{label_sequence, parse_program};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn doubling_then_ge_records_one_atom() {
        let p = parse_program("1: add Z1 = Z1 + Z1\n2: ge Z1 -> 3, 3\n3: halt").unwrap();
        let cs = extract_path_constraints(&p, &RealValue::sqrt_prime(1), None, 3).unwrap();
        assert_eq!(cs.steps, 3);
        assert_eq!(cs.path, vec![1, 2, 3]);
        assert_eq!(
            cs.atoms,
            vec![Atom::Sign {
                term: AffineTerm { k: BigInt::from(2), l: BigInt::zero() },
                condition: SignCondition::Ge,
            }]
        );
    }

    #[test]
    fn trivial_machine_has_empty_system() {
        let cs =
            extract_path_constraints(&Program::trivial(), &RealValue::pi(), None, 10).unwrap();
        assert!(cs.atoms.is_empty());
        assert_eq!(cs.path, vec![1]);
    }

    #[test]
    fn satisfying_rationals_replay_the_path() {
        let p = parse_program(
            "1: set Z2 = 1\n\
             2: sub Z3 = Z1 - Z2\n\
             3: eq Z3 -> 6, 4\n\
             4: ge Z3 -> 5, 6\n\
             5: add Z1 = Z1 + Z1\n\
             6: halt",
        )
        .unwrap();
        let target = RealValue::sqrt_prime(1);
        let cs = extract_path_constraints(&p, &target, None, 50).unwrap();
        let target_path = label_sequence(&p, std::slice::from_ref(&target), None, 50).unwrap();
        for num in -8i64..=8 {
            for den in 1i64..=4 {
                let q = rat(num, den);
                if cs.satisfied_by(&q, None) {
                    let qpath = label_sequence(
                        &p,
                        &[RealValue::from_rational(q.clone())],
                        None,
                        50,
                    )
                    .unwrap();
                    assert_eq!(qpath, target_path, "shadow {} must replay the path", q);
                }
            }
        }
    }

    #[test]
    fn invalid_targets_are_rejected()  {
        let two_sqrt2 = &RealValue::sqrt_prime(1) + &RealValue::sqrt_prime(1);
        assert_eq!(
            extract_path_constraints(&Program::trivial(), &two_sqrt2, None, 5).unwrap_err(),
            ConstraintError::InvalidTarget
        );
    }

    #[test]
    fn non_integer_constant_overflows() {
        let p = parse_program("1: set Z1 = 1/2\n2: halt").unwrap();
        assert_eq!(
            extract_path_constraints(&p, &RealValue::pi(), None, 5).unwrap_err(),
            ConstraintError::SymbolicOverflow { at: 1 }
        );
    }

    #[test]
    fn simplest_rational_matches_brute_force() {
        let cases = [
            (rat(1, 1), rat(3, 2)),
            (rat(2, 5), rat(3, 5)),
            (rat(-7, 3), rat(-2, 1)),
            (rat(-1, 4), rat(1, 7)),
            (rat(15, 11), rat(17, 12)),
            (rat(355, 113), rat(22, 7)),
        ];
        for (lo, hi) in cases {
            let got = simplest_rational_between(&lo, &hi);
            assert!(lo <= got && got <= hi);
            // Brute-force minimal denominator.
            let mut best_den = None;
            'outer: for den in 1i64..=200 {
                let lo_num = (&lo * rat(den, 1)).ceil().to_integer();
                let hi_num = (&hi * rat(den, 1)).floor().to_integer();
                if lo_num <= hi_num {
                    best_den = Some(den);
                    break 'outer;
                }
            }
            let best_den = best_den.expect("interval contains a small rational");
            assert_eq!(
                got.denom(),
                &BigInt::from(best_den),
                "minimal denominator in [{}, {}]",
                lo,
                hi
            );
        }
    }

    #[test]
    fn shadow_for_single_ge_test() {
        let p = parse_program("1: ge Z1 -> 2, 2\n2: halt").unwrap();
        let bound = BigUint::from(1_000u32);
        let q = rational_shadow_search(&p, &RealValue::sqrt_prime(1), None, 10, &bound)
            .expect("strict system has a shadow");
        assert!(!q.is_negative());
        let cs = extract_path_constraints(&p, &RealValue::sqrt_prime(1), None, 10).unwrap();
        assert!(cs.satisfied_by(&q, None));
    }

    #[test]
    fn shadow_avoids_recorded_disequalities() {
        let p = parse_program(
            "1: set Z2 = 1\n2: sub Z3 = Z1 - Z2\n3: eq Z3 -> 4, 5\n4: halt\n5: halt",
        )
        .unwrap();
        let bound = BigUint::from(1_000_000u32);
        let q = rational_shadow_search(&p, &RealValue::sqrt_prime(1), None, 10, &bound)
            .expect("disequality systems are satisfiable");
        assert_ne!(q, rat(1, 1));
        let target_path = label_sequence(&p, &[RealValue::sqrt_prime(1)], None, 10).unwrap();
        let q_path =
            label_sequence(&p, &[RealValue::from_rational(q)], None, 10).unwrap();
        assert_eq!(q_path, target_path);
    }

    #[test]
    fn shadow_none_when_denominator_cap_is_tiny() {
        // Force a very tight margin: compare 4*x against 5 so the gap
        // around sqrt(2) is small and needs denominator > 1.
        let p = parse_program(
            "1: set Z2 = 1\n\
             2: add Z3 = Z1 + Z1\n\
             3: add Z3 = Z3 + Z3\n\
             4: add Z4 = Z2 + Z2\n\
             5: add Z4 = Z4 + Z4\n\
             6: add Z4 = Z4 + Z2\n\
             7: sub Z5 = Z3 - Z4\n\
             8: ge Z5 -> 9, 9\n\
             9: halt",
        )
        .unwrap();
        let tiny = BigUint::from(1u32);
        assert_eq!(
            rational_shadow_search(&p, &RealValue::sqrt_prime(1), None, 20, &tiny),
            None
        );
    }

    #[test]
    fn pi_shadow_works_too() {
        let p = parse_program(
            "1: set Z2 = 1\n\
             2: add Z3 = Z2 + Z2\n\
             3: add Z3 = Z3 + Z2\n\
             4: sub Z4 = Z1 - Z3\n\
             5: ge Z4 -> 6, 7\n\
             6: halt\n\
             7: halt",
        )
        .unwrap();
        let bound = BigUint::from(10_000u32);
        let q = rational_shadow_search(&p, &RealValue::pi(), None, 20, &bound)
            .expect("pi > 3 is a strict margin");
        assert!(q > rat(3, 1));
        let target_path = label_sequence(&p, &[RealValue::pi()], None, 20).unwrap();
        let q_path = label_sequence(&p, &[RealValue::from_rational(q)], None, 20).unwrap();
        assert_eq!(q_path, target_path);
    }
}
