//! Exact real values from the rational span of a fixed generator set.
//!
//! Every value an additive machine with constants 0 and 1 can produce
//! from inputs in the span `Q + Q*sqrt(p_1) + Q*sqrt(p_2) + ... + Q*pi`
//! stays inside that span, because the machine only adds and subtracts.
//! A [`RealValue`] stores the rational constant and the finite map of
//! nonzero generator coefficients, so equality with 0 is a symbolic
//! check on the coefficients.
//!
//! This rests on the linear independence of `{1, sqrt(p_1), ...,
//! sqrt(p_k), pi}` over Q: square roots of distinct primes are
//! independent over Q, and pi is transcendental. The assumption is used
//! exactly once — `sign` reports 0 if and only if all stored
//! coefficients vanish — and everything else follows from exact
//! rational arithmetic.
//!
//! Sign determination for nonzero values refines rational enclosures of
//! the generators (bisection on squares for `sqrt(p)`, a Machin-style
//! alternating series for `pi`) until the enclosing interval of the
//! value excludes 0. The refinement schedule halves the requested width
//! each round starting at 1, so the cost is logarithmic in the distance
//! of the value from 0. No floating point is involved anywhere.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::primes::{nth_prime, prime_index};

/// One generator of the value span besides the rational unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GeneratorId {
    /// `sqrt(p_i)` for the i-th prime, `i >= 1` (`p_1 = 2, p_2 = 3, ...`).
    SqrtPrime(u64),
    /// The circle constant.
    Pi,
}

impl GeneratorId {
    /// The prime under the root, if this is a square-root generator.
    pub fn prime(&self) -> Option<u64> {
        match self {
            GeneratorId::SqrtPrime(i) => Some(nth_prime(*i)),
            GeneratorId::Pi => None,
        }
    }
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorId::SqrtPrime(i) => write!(f, "sqrt({})", nth_prime(*i)),
            GeneratorId::Pi => write!(f, "pi"),
        }
    }
}

/// Default generator set; covers every value the bundled examples and
/// tests use. Values may also carry coefficients on any other
/// `SqrtPrime(i)` — the arithmetic and sign machinery are uniform.
pub const DEFAULT_GENERATOR_COUNT: u64 = 5;

/// The default session generators: `sqrt(2), sqrt(3), sqrt(5), sqrt(7),
/// sqrt(11), pi`.
pub fn default_generators() -> Vec<GeneratorId> {
    let mut g: Vec<GeneratorId> = (1..=DEFAULT_GENERATOR_COUNT)
        .map(GeneratorId::SqrtPrime)
        .collect();
    g.push(GeneratorId::Pi);
    g
}

/// An exact element of the rational span of `{1}` and the generators.
///
/// Canonical form: no stored coefficient is zero, so a value is
/// rational if and only if `coeffs` is empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RealValue {
    constant: BigRational,
    coeffs: BTreeMap<GeneratorId, BigRational>,
}

impl RealValue {
    pub fn zero() -> Self {
        RealValue {
            constant: BigRational::zero(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        RealValue::from_rational(BigRational::one())
    }

    /// An exact rational value.
    pub fn from_rational(q: BigRational) -> Self {
        RealValue {
            constant: q,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_integer(n: i64) -> Self {
        RealValue::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// The generator itself as a value (coefficient 1).
    pub fn generator(g: GeneratorId) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(g, BigRational::one());
        RealValue {
            constant: BigRational::zero(),
            coeffs,
        }
    }

    /// `sqrt(p_i)` by prime index.
    pub fn sqrt_prime(i: u64) -> Self {
        RealValue::generator(GeneratorId::SqrtPrime(i))
    }

    pub fn pi() -> Self {
        RealValue::generator(GeneratorId::Pi)
    }

    /// Builds `constant + sum coeff*generator`, dropping zero coefficients.
    pub fn from_parts(
        constant: BigRational,
        coeffs: impl IntoIterator<Item = (GeneratorId, BigRational)>,
    ) -> Self {
        let mut v = RealValue {
            constant,
            coeffs: BTreeMap::new(),
        };
        for (g, c) in coeffs {
            v.add_coeff(g, c);
        }
        v
    }

    fn add_coeff(&mut self, g: GeneratorId, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.entry(g) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn constant(&self) -> &BigRational {
        &self.constant
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&GeneratorId, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, g: GeneratorId) -> BigRational {
        self.coeffs.get(&g).cloned().unwrap_or_else(BigRational::zero)
    }

    /// True iff the value lies in Q (empty coefficient map).
    pub fn is_rational(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The exact rational value, if rational.
    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.is_rational() {
            Some(&self.constant)
        } else {
            None
        }
    }

    /// The exact integer value, if the value is an integer.
    pub fn as_integer(&self) -> Option<BigInt> {
        let q = self.as_rational()?;
        if q.is_integer() {
            Some(q.to_integer())
        } else {
            None
        }
    }

    /// The exact value as a `u64`, if it is an integer in range.
    pub fn as_u64(&self) -> Option<u64> {
        use num_traits::ToPrimitive;
        self.as_integer()?.to_u64()
    }

    pub fn is_zero_value(&self) -> bool {
        self.constant.is_zero() && self.coeffs.is_empty()
    }

    /// Multiplies by an exact rational (the span is a Q-vector space).
    pub fn scale(&self, q: &BigRational) -> RealValue {
        if q.is_zero() {
            return RealValue::zero();
        }
        RealValue {
            constant: &self.constant * q,
            coeffs: self
                .coeffs
                .iter()
                .map(|(g, c)| (*g, c * q))
                .collect(),
        }
    }

    /// Exact sign: `Equal` iff the value is the canonical zero (decided
    /// symbolically), otherwise `Less`/`Greater` by interval refinement,
    /// which terminates for every nonzero value.
    pub fn sign(&self) -> Ordering {
        if self.coeffs.is_empty() {
            return self.constant.cmp(&BigRational::zero());
        }
        // Nonzero by linear independence; refine until the hull excludes 0.
        let mut width = BigRational::one();
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        loop {
            let hull = self.interval_hull(&width);
            if hull.lo.is_positive() {
                return Ordering::Greater;
            }
            if hull.hi.is_negative() {
                return Ordering::Less;
            }
            width *= &half;
        }
    }

    /// Exact comparison of two values.
    pub fn cmp_exact(&self, other: &RealValue) -> Ordering {
        (self - other).sign()
    }

    /// Encloses the value using generator intervals of width `<= width`.
    pub fn interval_hull(&self, width: &BigRational) -> RationalInterval {
        let mut lo = self.constant.clone();
        let mut hi = self.constant.clone();
        for (g, c) in &self.coeffs {
            let iv = refine_interval(*g, width);
            let (a, b) = if c.is_positive() {
                (&iv.lo * c, &iv.hi * c)
            } else {
                (&iv.hi * c, &iv.lo * c)
            };
            lo += a;
            hi += b;
        }
        RationalInterval { lo, hi }
    }
}

impl Add<&RealValue> for &RealValue {
    type Output = RealValue;
    fn add(self, rhs: &RealValue) -> RealValue {
        let mut out = self.clone();
        out.constant += &rhs.constant;
        for (g, c) in &rhs.coeffs {
            out.add_coeff(*g, c.clone());
        }
        out
    }
}

impl Sub<&RealValue> for &RealValue {
    type Output = RealValue;
    fn sub(self, rhs: &RealValue) -> RealValue {
        let mut out = self.clone();
        out.constant -= &rhs.constant;
        for (g, c) in &rhs.coeffs {
            out.add_coeff(*g, -c.clone());
        }
        out
    }
}

impl Neg for &RealValue {
    type Output = RealValue;
    fn neg(self) -> RealValue {
        RealValue {
            constant: -self.constant.clone(),
            coeffs: self.coeffs.iter().map(|(g, c)| (*g, -c.clone())).collect(),
        }
    }
}

/// A closed rational interval `[lo, hi]` with `lo <= hi`, used to
/// enclose generators and value hulls during sign determination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RationalInterval {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    fn intersect(&self, other: &RationalInterval) -> RationalInterval {
        let lo = if self.lo >= other.lo {
            self.lo.clone()
        } else {
            other.lo.clone()
        };
        let hi = if self.hi <= other.hi {
            self.hi.clone()
        } else {
            other.hi.clone()
        };
        debug_assert!(lo <= hi, "enclosures of the same generator must overlap");
        RationalInterval { lo, hi }
    }
}

fn interval_cache() -> &'static Mutex<HashMap<GeneratorId, RationalInterval>> {
    static CACHE: OnceLock<Mutex<HashMap<GeneratorId, RationalInterval>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Returns an interval of width `<= max_width` containing the generator.
///
/// Successive calls with smaller widths return nested-or-tighter
/// intervals: results are cached per generator and refinement always
/// continues from the cached enclosure.
///
/// Panics if `max_width <= 0`.
pub fn refine_interval(g: GeneratorId, max_width: &BigRational) -> RationalInterval {
    assert!(max_width.is_positive(), "interval width must be positive");
    let cache = interval_cache();
    let cached = cache.lock().unwrap().get(&g).cloned();
    if let Some(iv) = &cached {
        if iv.width() <= *max_width {
            return iv.clone();
        }
    }
    let fresh = match g {
        GeneratorId::SqrtPrime(i) => refine_sqrt(nth_prime(i), cached, max_width),
        GeneratorId::Pi => {
            let iv = refine_pi(max_width);
            match cached {
                Some(c) => c.intersect(&iv),
                None => iv,
            }
        }
    };
    cache.lock().unwrap().insert(g, fresh.clone());
    fresh
}

/// Bisection on squares: keeps `lo^2 < p < hi^2` throughout. The
/// midpoint never squares to `p` exactly because `sqrt(p)` is
/// irrational for prime `p`.
fn refine_sqrt(
    p: u64,
    start: Option<RationalInterval>,
    max_width: &BigRational,
) -> RationalInterval {
    let p_rat = BigRational::from_integer(BigInt::from(p));
    let mut iv = start.unwrap_or_else(|| {
        let r = num_integer::Roots::sqrt(&p);
        RationalInterval {
            lo: BigRational::from_integer(BigInt::from(r)),
            hi: BigRational::from_integer(BigInt::from(r + 1)),
        }
    });
    let two = BigRational::from_integer(BigInt::from(2));
    while iv.width() > *max_width {
        let mid = (&iv.lo + &iv.hi) / &two;
        if &mid * &mid < p_rat {
            iv.lo = mid;
        } else {
            iv.hi = mid;
        }
    }
    iv
}

/// Enclosure of `arctan(1/x)` from `m` paired terms of the alternating
/// series: the even partial sum bounds below, the odd one above.
fn atan_inv_bounds(x: u64, m: usize) -> (BigRational, BigRational) {
    let x2 = BigRational::from_integer(BigInt::from(x) * BigInt::from(x));
    let mut term = BigRational::new(BigInt::one(), BigInt::from(x));
    let mut lower = BigRational::zero();
    let mut k = 0u64;
    // lower after an even number of terms, upper after one more.
    for _ in 0..m {
        let t1 = &term / BigRational::from_integer(BigInt::from(2 * k + 1));
        term /= &x2;
        k += 1;
        let t2 = &term / BigRational::from_integer(BigInt::from(2 * k + 1));
        term /= &x2;
        k += 1;
        lower += t1 - t2;
    }
    let upper = &lower + &term / BigRational::from_integer(BigInt::from(2 * k + 1));
    (lower, upper)
}

/// Machin's identity `pi = 16*arctan(1/5) - 4*arctan(1/239)` with both
/// arctangents enclosed by alternating partial sums. Enclosures are
/// nested in the term count, so refinement is monotone. Seeded with the
/// classical `[3, 4]` bound for very coarse requests.
fn refine_pi(max_width: &BigRational) -> RationalInterval {
    let seed = RationalInterval {
        lo: BigRational::from_integer(BigInt::from(3)),
        hi: BigRational::from_integer(BigInt::from(4)),
    };
    if seed.width() <= *max_width {
        return seed;
    }
    let sixteen = BigRational::from_integer(BigInt::from(16));
    let four = BigRational::from_integer(BigInt::from(4));
    let mut m = 1usize;
    loop {
        let (lo5, hi5) = atan_inv_bounds(5, m);
        let (lo239, hi239) = atan_inv_bounds(239, m);
        let lo = &sixteen * &lo5 - &four * &hi239;
        let hi = &sixteen * &hi5 - &four * &lo239;
        let iv = RationalInterval { lo, hi };
        if iv.width() <= *max_width {
            return iv;
        }
        m += 1;
    }
}

fn fmt_rational(q: &BigRational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if q.is_integer() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

/// Text form, round-trips bit-exactly through the parser:
/// `c + q1*sqrt(p) + q2*pi` with exact rationals as `num/den`.
impl fmt::Display for RealValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero_value() {
            return write!(f, "0");
        }
        let mut first = true;
        if !self.constant.is_zero() || self.coeffs.is_empty() {
            fmt_rational(&self.constant, f)?;
            first = false;
        }
        for (g, c) in &self.coeffs {
            if first {
                fmt_rational(c, f)?;
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
                fmt_rational(&-c, f)?;
            } else {
                write!(f, " + ")?;
                fmt_rational(c, f)?;
            }
            write!(f, "*{}", g)?;
        }
        Ok(())
    }
}

/// Error from parsing the value text form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueParseError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ValueParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid value at byte {}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ValueParseError {}

struct ValueParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> ValueParser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ValueParseError> {
        Err(ValueParseError {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Result<BigInt, ValueParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected digits");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(BigInt::from_str(s).unwrap())
    }

    fn rational(&mut self) -> Result<BigRational, ValueParseError> {
        let n = self.digits()?;
        if self.eat(b'/') {
            let d = self.digits()?;
            if d.is_zero() {
                return self.err("zero denominator");
            }
            Ok(BigRational::new(n, d))
        } else {
            Ok(BigRational::from_integer(n))
        }
    }

    fn generator(&mut self) -> Result<Option<GeneratorId>, ValueParseError> {
        let rest = &self.src[self.pos..];
        if rest.starts_with(b"sqrt") {
            self.pos += 4;
            self.skip_ws();
            if !self.eat(b'(') {
                return self.err("expected '(' after sqrt");
            }
            self.skip_ws();
            let p = self.digits()?;
            self.skip_ws();
            if !self.eat(b')') {
                return self.err("expected ')'");
            }
            use num_traits::ToPrimitive;
            let p = match p.to_u64() {
                Some(p) => p,
                None => return self.err("square-root argument out of range"),
            };
            match prime_index(p) {
                Some(i) => Ok(Some(GeneratorId::SqrtPrime(i))),
                None => self.err(format!("sqrt({}) is not a generator: {} is not prime", p, p)),
            }
        } else if rest.starts_with(b"pi") {
            self.pos += 2;
            Ok(Some(GeneratorId::Pi))
        } else {
            Ok(None)
        }
    }

    /// One signed term: rational, generator, or rational '*' generator.
    fn term(&mut self, negate: bool) -> Result<RealValue, ValueParseError> {
        self.skip_ws();
        let mut v = if let Some(g) = self.generator()? {
            RealValue::generator(g)
        } else {
            let q = self.rational()?;
            self.skip_ws();
            if self.eat(b'*') {
                self.skip_ws();
                match self.generator()? {
                    Some(g) => RealValue::from_parts(BigRational::zero(), [(g, q)]),
                    None => return self.err("expected sqrt(p) or pi after '*'"),
                }
            } else {
                RealValue::from_rational(q)
            }
        };
        if negate {
            v = -&v;
        }
        Ok(v)
    }

    fn value(&mut self) -> Result<RealValue, ValueParseError> {
        self.skip_ws();
        let neg = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        let mut acc = self.term(neg)?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term(false)?;
                    acc = &acc + &t;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term(true)?;
                    acc = &acc + &t;
                }
                None => return Ok(acc),
                Some(c) => return self.err(format!("unexpected byte {:?}", c as char)),
            }
        }
    }
}

impl FromStr for RealValue {
    type Err = ValueParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = ValueParser {
            src: s.as_bytes(),
            pos: 0,
        };
        p.value()
    }
}
