//! Decision problems over the reals and their budgeted semi-decisions:
//! rationality, affine rational dependence of tuples, the prime
//! square-root separations, and the layered halting problems built from
//! them.

mod constraints;
mod kappa;

pub use constraints::{
    extract_path_constraints, rational_shadow_search, simplest_rational_between, AffineTerm, Atom,
    ConstraintError, ConstraintSystem, SignCondition,
};
pub use kappa::{halting_point, kappa_code, kappa_program, p_point};

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::encoding::{decode, BitString};
use crate::machine::{run_bounded, Dialect, RunOutcome};
use crate::reals::RealValue;

/// The j-th prime, `nth_prime(1) = 2`.
pub fn nth_prime(j: u64) -> u64 {
    crate::primes::nth_prime(j)
}

/// Exact rationality test; under the generator independence assumption
/// a value is rational iff its coefficient map is empty.
pub fn rationality_decide(x: &RealValue) -> bool {
    x.is_rational()
}

/// Result of a budgeted semi-decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Budgeted<T> {
    Halted { witness: T, cost: u64 },
    NotWithinBudget,
}

impl<T> Budgeted<T> {
    pub fn halted(&self) -> bool {
        matches!(self, Budgeted::Halted { .. })
    }
}

/// Exact Gaussian elimination; returns any solution (free unknowns 0).
#[allow(clippy::needless_range_loop)]
fn solve_exact(
    mut rows: Vec<Vec<BigRational>>,
    mut rhs: Vec<BigRational>,
) -> Option<Vec<BigRational>> {
    let m = rows.len();
    let cols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut row = 0usize;
    for col in 0..cols {
        let Some(p) = (row..m).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(row, p);
        rhs.swap(row, p);
        let inv = rows[row][col].clone();
        for c in col..cols {
            rows[row][c] = &rows[row][c] / &inv;
        }
        rhs[row] = &rhs[row] / &inv;
        for r in 0..m {
            if r != row && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in col..cols {
                    let delta = &factor * &rows[row][c];
                    rows[r][c] = &rows[r][c] - delta;
                }
                let delta = &factor * &rhs[row];
                rhs[r] = &rhs[r] - delta;
            }
        }
        pivot_of_col[col] = Some(row);
        row += 1;
        if row == m {
            break;
        }
    }
    // Consistency: a zeroed row with nonzero right-hand side.
    for r in row..m {
        if rows[r].iter().all(|v| v.is_zero()) && !rhs[r].is_zero() {
            return None;
        }
    }
    let mut solution = vec![BigRational::zero(); cols];
    for col in 0..cols {
        if let Some(r) = pivot_of_col[col] {
            solution[col] = rhs[r].clone();
        }
    }
    Some(solution)
}

/// Exact membership in the affine-dependence set: is the last component
/// a rational affine combination `q_0 + sum q_i * x_i` of the others?
/// Returns the witness coefficients when it is.
pub fn l_n_decide(tuple: &[RealValue]) -> Option<Vec<BigRational>> {
    assert!(!tuple.is_empty());
    let n = tuple.len();
    let lead = &tuple[..n - 1];
    let last = &tuple[n - 1];
    let mut generators: BTreeSet<crate::reals::GeneratorId> = BTreeSet::new();
    for x in tuple {
        generators.extend(x.coeffs().map(|(g, _)| *g));
    }
    // One row per coordinate: the constant, then each generator.
    let mut rows = Vec::with_capacity(1 + generators.len());
    let mut rhs = Vec::with_capacity(1 + generators.len());
    let mut constant_row = Vec::with_capacity(n);
    constant_row.push(BigRational::one());
    for x in lead {
        constant_row.push(x.constant().clone());
    }
    rows.push(constant_row);
    rhs.push(last.constant().clone());
    for g in &generators {
        let mut row = Vec::with_capacity(n);
        row.push(BigRational::zero());
        for x in lead {
            row.push(x.coeff(*g));
        }
        rows.push(row);
        rhs.push(last.coeff(*g));
    }
    let witness = solve_exact(rows, rhs)?;
    debug_assert!(l_n_witness_checks(tuple, &witness));
    Some(witness)
}

/// Exact substitution check of a witness into the defining equation.
pub fn l_n_witness_checks(tuple: &[RealValue], witness: &[BigRational]) -> bool {
    let n = tuple.len();
    if witness.len() != n {
        return false;
    }
    let mut acc = RealValue::from_rational(witness[0].clone());
    for (x, q) in tuple[..n - 1].iter().zip(&witness[1..]) {
        acc = &acc + &x.scale(q);
    }
    acc == tuple[n - 1]
}

/// Rationals of height `|num| + den` equal to `h`, in canonical order.
fn rationals_of_height(h: u64) -> Vec<BigRational> {
    let mut out = Vec::new();
    if h == 1 {
        out.push(BigRational::zero());
        return out;
    }
    for den in 1..h {
        let num = h - den;
        if num_integer::gcd(num, den) != 1 {
            continue;
        }
        let q = BigRational::new(BigInt::from(num), BigInt::from(den));
        out.push(q.clone());
        out.push(-q);
    }
    out
}

fn height_of(q: &BigRational) -> u64 {
    use num_traits::ToPrimitive;
    let num = q.numer().magnitude().to_u64().unwrap_or(u64::MAX);
    let den = q.denom().magnitude().to_u64().unwrap_or(u64::MAX);
    num.saturating_add(den)
}

/// Budgeted semi-decision of affine dependence: enumerates witness
/// tuples over Q by increasing height and substitutes exactly. The
/// budget counts candidate tuples.
pub fn l_n_semidecide(tuple: &[RealValue], budget: u64) -> Budgeted<Vec<BigRational>> {
    assert!(!tuple.is_empty());
    if budget == 0 {
        return Budgeted::NotWithinBudget;
    }
    let n = tuple.len();
    let mut tested = 0u64;
    let mut pool: Vec<BigRational> = Vec::new();
    for h in 1.. {
        pool.extend(rationals_of_height(h));
        // Odometer over pool^n, keeping only tuples that use height h.
        let m = pool.len();
        let mut idx = vec![0usize; n];
        'odometer: loop {
            let uses_h = idx.iter().any(|&i| height_of(&pool[i]) == h);
            if uses_h {
                tested += 1;
                let witness: Vec<BigRational> = idx.iter().map(|&i| pool[i].clone()).collect();
                if l_n_witness_checks(tuple, &witness) {
                    return Budgeted::Halted { witness, cost: tested };
                }
                if tested >= budget {
                    return Budgeted::NotWithinBudget;
                }
            }
            for pos in (0..n).rev() {
                idx[pos] += 1;
                if idx[pos] < m {
                    continue 'odometer;
                }
                idx[pos] = 0;
            }
            break;
        }
    }
    unreachable!("height enumeration is infinite")
}

/// Budgeted semi-decision of `x != sqrt(p_i)`: enumerates `(r, q)` in
/// diagonal order and checks the strict separation `(x < r/q and
/// (r/q)^2 < p_i) or (x > r/q and (r/q)^2 > p_i)` exactly. The budget
/// counts pairs; the witness is the first separating pair.
pub fn kappa_semidecide(i: u64, x: &RealValue, budget: u64) -> Budgeted<(u64, u64)> {
    assert!(i >= 1);
    if budget == 0 {
        return Budgeted::NotWithinBudget;
    }
    let p = nth_prime(i);
    let mut tested = 0u64;
    for d in 1u64.. {
        for r in 0..d {
            let q = d - r;
            tested += 1;
            if kappa_condition(p, x, r, q) {
                return Budgeted::Halted { witness: (r, q), cost: tested };
            }
            if tested >= budget {
                return Budgeted::NotWithinBudget;
            }
        }
    }
    unreachable!("diagonal enumeration is infinite")
}

/// The separator condition for one pair, decided exactly.
pub fn kappa_condition(p: u64, x: &RealValue, r: u64, q: u64) -> bool {
    let ratio = RealValue::from_rational(BigRational::new(BigInt::from(r), BigInt::from(q)));
    let cmp = x.cmp_exact(&ratio);
    // r^2 versus q^2 * p in integers.
    let rr = (r as u128) * (r as u128);
    let qqp = (q as u128) * (q as u128) * (p as u128);
    match cmp {
        Ordering::Less => rr < qqp,
        Ordering::Greater => rr > qqp,
        Ordering::Equal => false,
    }
}

/// Exact membership in the i-th square-root point set: the point must
/// be `(2, i, x, code)` with the separator machine's code and
/// `x != sqrt(p_i)`.
pub fn p_i_member(point: &[RealValue], i: u64) -> bool {
    match p_shape(point) {
        Some((j, x)) => j == i && *x != RealValue::sqrt_prime(i),
        None => false,
    }
}

/// Recognizes the rigid parts of `(2, j, x, code(separator))`.
fn p_shape(point: &[RealValue]) -> Option<(u64, &RealValue)> {
    let code = kappa_code();
    if point.len() != 3 + code.len() {
        return None;
    }
    if point[0] != RealValue::from_integer(2) {
        return None;
    }
    let j = point[1].as_u64()?;
    if j == 0 {
        return None;
    }
    let tail = BitString::from_real_slice(&point[3..])?;
    if &tail != code {
        return None;
    }
    Some((j, &point[2]))
}

/// How a layered-halting point got accepted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HiOutcome {
    /// Accepted as an eq-dialect halting point `(n . x . code)`.
    AcceptedHalting { steps: u64 },
    /// Accepted as a square-root point via the separator, layer `j`.
    AcceptedPrime { j: u64, pair: (u64, u64), cost: u64 },
    NotWithinBudget,
}

impl HiOutcome {
    pub fn accepted(&self) -> bool {
        !matches!(self, HiOutcome::NotWithinBudget)
    }
}

/// Budgeted semi-decision of the i-th layered halting problem: the
/// eq-dialect halting points union the square-root point sets for
/// layers `j <= i` (i = 0 is the plain eq-dialect halting problem).
/// Malformed points are simply never accepted.
pub fn h_i_semidecide(point: &[RealValue], i: u64, budget: u64) -> HiOutcome {
    // Route (a): (n . x . code) with an eq-dialect machine halting on x.
    if let Some(outcome) = halting_route(point, budget) {
        return outcome;
    }
    // Route (b): the square-root point sets, through the separator.
    if let Some((j, x)) = p_shape(point) {
        if j <= i {
            if let Budgeted::Halted { witness, cost } = kappa_semidecide(j, x, budget) {
                return HiOutcome::AcceptedPrime { j, pair: witness, cost };
            }
        }
    }
    HiOutcome::NotWithinBudget
}

fn halting_route(point: &[RealValue], budget: u64) -> Option<HiOutcome> {
    let n = point.first()?.as_u64()?;
    if n < 1 {
        return None;
    }
    let n = usize::try_from(n).ok()?;
    if point.len() < n.checked_add(2)? {
        return None;
    }
    let input = &point[1..=n];
    let bits = BitString::from_real_slice(&point[n + 1..])?;
    let program = decode(&bits)?;
    if !Dialect::ADD_EQ.admits(&program.dialect()) {
        return None;
    }
    match run_bounded(&program, input, None, budget).ok()? {
        RunOutcome::Halted { steps, .. } => Some(HiOutcome::AcceptedHalting { steps }),
        RunOutcome::Running(_) => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("selector index {k} out of range 1..={i}")]
    PreconditionViolated { k: u64, i: u64 },
}

/// The exclusion algorithm over the oracle `{sqrt(p_1), ..., sqrt(p_i)}`:
/// outputs 1 iff the input is `sqrt(p_k)`. Total: the membership query
/// is answered exactly, and for members every wrong index is eventually
/// deleted by a separating rational.
pub fn sqrt_select_decide(k: u64, x: &RealValue, i: u64) -> Result<u8, SelectError> {
    if k < 1 || k > i {
        return Err(SelectError::PreconditionViolated { k, i });
    }
    // Oracle query: x in {sqrt(p_1), ..., sqrt(p_i)}?
    let member = (1..=i).find(|&j| *x == RealValue::sqrt_prime(j));
    let Some(j0) = member else {
        return Ok(0);
    };
    let mut alive: BTreeSet<u64> = (1..=i).collect();
    if alive.len() == 1 {
        debug_assert_eq!(j0, k);
        return Ok(1);
    }
    let primes: Vec<u64> = (1..=i).map(nth_prime).collect();
    for d in 1u64.. {
        for r in 0..d {
            let q = d - r;
            for j in alive.clone() {
                if kappa_condition(primes[j as usize - 1], x, r, q) {
                    if j == k {
                        return Ok(0);
                    }
                    alive.remove(&j);
                    if alive.len() == 1 {
                        debug_assert!(alive.contains(&j0) && j0 == k);
                        return Ok(1);
                    }
                }
            }
        }
    }
    unreachable!("every wrong index is separated eventually")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Program;
    use crate::reals::GeneratorId;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn primes_match_the_enumeration() {
        assert_eq!(nth_prime(1), 2);
        assert_eq!(nth_prime(2), 3);
        assert_eq!(nth_prime(25), 97);
    }

    #[test]
    fn primes_cross_checked_against_a_sieve() {
        // Independent oracle: a literal Eratosthenes sieve.
        let limit = 200usize;
        let mut composite = vec![false; limit + 1];
        let mut sieved = Vec::new();
        for n in 2..=limit {
            if !composite[n] {
                sieved.push(n as u64);
                let mut m = n * n;
                while m <= limit {
                    composite[m] = true;
                    m += n;
                }
            }
        }
        for (idx, p) in sieved.iter().enumerate() {
            assert_eq!(nth_prime(idx as u64 + 1), *p);
        }
    }

    #[test]
    fn rationality_examples() {
        assert!(rationality_decide(&RealValue::from_rational(rat(22, 7))));
        assert!(!rationality_decide(&RealValue::sqrt_prime(1)));
        let pi = RealValue::pi();
        let cancelled = &(&pi - &pi) + &RealValue::from_integer(3);
        assert!(rationality_decide(&cancelled));
    }

    #[test]
    fn affine_dependence_reads_off_coefficients() {
        let s2 = RealValue::sqrt_prime(1);
        let y = RealValue::from_parts(rat(3, 1), [(GeneratorId::SqrtPrime(1), rat(2, 1))]);
        let witness = l_n_decide(&[s2.clone(), y]).expect("member");
        assert_eq!(witness, vec![rat(3, 1), rat(2, 1)]);

        assert!(l_n_decide(&[s2, RealValue::pi()]).is_none());
    }

    #[test]
    fn l1_is_rationality() {
        for v in [
            RealValue::from_integer(4),
            RealValue::from_rational(rat(-9, 5)),
            RealValue::sqrt_prime(3),
            RealValue::pi(),
        ] {
            assert_eq!(l_n_decide(std::slice::from_ref(&v)).is_some(), rationality_decide(&v));
        }
    }

    #[test]
    fn semidecide_finds_small_witnesses() {
        let s2 = RealValue::sqrt_prime(1);
        let y = RealValue::from_parts(rat(3, 1), [(GeneratorId::SqrtPrime(1), rat(2, 1))]);
        match l_n_semidecide(&[s2.clone(), y], 100_000) {
            Budgeted::Halted { witness, .. } => {
                assert_eq!(witness, vec![rat(3, 1), rat(2, 1)]);
            }
            Budgeted::NotWithinBudget => panic!("witness of height 4 is reachable"),
        }
        assert_eq!(
            l_n_semidecide(&[s2, RealValue::pi()], 20_000),
            Budgeted::NotWithinBudget
        );
    }

    #[test]
    fn semidecide_agrees_with_decide() {
        let tuples: Vec<Vec<RealValue>> = vec![
            vec![RealValue::from_integer(5)],
            vec![RealValue::sqrt_prime(1), RealValue::sqrt_prime(1)],
            vec![RealValue::pi(), &RealValue::pi() + &RealValue::one()],
            vec![RealValue::sqrt_prime(2), RealValue::pi()],
        ];
        for t in tuples {
            let semi = l_n_semidecide(&t, 5_000);
            match semi {
                Budgeted::Halted { witness, .. } => {
                    assert!(l_n_decide(&t).is_some());
                    assert!(l_n_witness_checks(&t, &witness));
                }
                Budgeted::NotWithinBudget => {}
            }
        }
    }

    #[test]
    fn kappa_halts_on_separable_points() {
        let x = RealValue::from_rational(rat(3, 2));
        match kappa_semidecide(1, &x, 1_000) {
            Budgeted::Halted { witness: (r, q), .. } => {
                assert!(kappa_condition(2, &x, r, q));
            }
            _ => panic!("3/2 is separable from sqrt(2)"),
        }
        // sqrt(2) against p_2 = 3: separable.
        assert!(kappa_semidecide(2, &RealValue::sqrt_prime(1), 1_000).halted());
    }

    #[test]
    fn kappa_never_accepts_the_root_itself() {
        let s2 = RealValue::sqrt_prime(1);
        assert_eq!(kappa_semidecide(1, &s2, 2_000), Budgeted::NotWithinBudget);
    }

    #[test]
    fn p_point_membership() {
        assert!(p_i_member(&p_point(1, RealValue::from_integer(5)), 1));
        assert!(!p_i_member(&p_point(1, RealValue::sqrt_prime(1)), 1));
        // Wrong trailing bits.
        let mut wrong = p_point(1, RealValue::from_integer(5));
        let last = wrong.len() - 1;
        wrong[last] = RealValue::from_integer(7);
        assert!(!p_i_member(&wrong, 1));
        // Mismatched layer index.
        assert!(!p_i_member(&p_point(2, RealValue::from_integer(5)), 1));
    }

    #[test]
    fn h_i_accepts_halting_points() {
        let point = halting_point(&[RealValue::from_integer(7)], &Program::trivial()).unwrap();
        match h_i_semidecide(&point, 0, 100) {
            HiOutcome::AcceptedHalting { steps } => assert_eq!(steps, 1),
            other => panic!("trivial machine halts on 7: {other:?}"),
        }
    }

    #[test]
    fn h_i_layer_gating() {
        let point = p_point(1, RealValue::from_integer(5));
        // Layer 0 has no square-root route.
        assert_eq!(h_i_semidecide(&point, 0, 10_000), HiOutcome::NotWithinBudget);
        assert!(h_i_semidecide(&point, 1, 10_000).accepted());
        // The excluded point never enters.
        let excluded = p_point(1, RealValue::sqrt_prime(1));
        assert_eq!(h_i_semidecide(&excluded, 1, 5_000), HiOutcome::NotWithinBudget);
    }

    #[test]
    fn h_i_monotone_in_the_layer() {
        let point = p_point(2, RealValue::from_rational(rat(7, 4)));
        assert_eq!(h_i_semidecide(&point, 1, 10_000), HiOutcome::NotWithinBudget);
        let at2 = h_i_semidecide(&point, 2, 10_000);
        assert!(at2.accepted());
        assert_eq!(h_i_semidecide(&point, 3, 10_000), at2);
    }

    #[test]
    fn selector_examples() {
        assert_eq!(sqrt_select_decide(2, &RealValue::sqrt_prime(2), 3), Ok(1));
        assert_eq!(sqrt_select_decide(2, &RealValue::sqrt_prime(1), 3), Ok(0));
        assert_eq!(sqrt_select_decide(1, &RealValue::from_rational(rat(7, 2)), 3), Ok(0));
        assert_eq!(
            sqrt_select_decide(4, &RealValue::sqrt_prime(1), 3),
            Err(SelectError::PreconditionViolated { k: 4, i: 3 })
        );
    }
}
