//! Exact continued-fraction arithmetic on rationals: Gauss-map expansion,
//! convergents, cylinder intervals and the classical inequalities linking
//! them.
//!
//! All arithmetic is exact (`BigInt`/`BigRational`); nothing in this module
//! touches floating point except the log guard in [`DigitSequence::log_digits`].

use std::collections::HashSet;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logscalar::LogScalar;

pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DigitMode {
    Exact,
    LogSpace,
}

/// Partial quotients a_1..a_n, either exact or carried by their logs.
#[derive(Clone, Debug, PartialEq)]
pub enum DigitSequence {
    Exact(Vec<BigUint>),
    LogSpace(Vec<LogScalar>),
}

impl DigitSequence {
    pub fn empty() -> Self {
        DigitSequence::Exact(Vec::new())
    }

    pub fn exact(digits: Vec<BigUint>) -> Result<Self> {
        if let Some(pos) = digits.iter().position(|d| d.is_zero()) {
            return Err(Error::Input(format!(
                "digit {} is zero; partial quotients are >= 1",
                pos + 1
            )));
        }
        Ok(DigitSequence::Exact(digits))
    }

    pub fn from_u64s(digits: &[u64]) -> Result<Self> {
        Self::exact(digits.iter().map(|&d| BigUint::from(d)).collect())
    }

    pub fn log_space(digits: Vec<LogScalar>) -> Result<Self> {
        if let Some(pos) = digits.iter().position(|d| d.ln_f64() < 0.0 || d.is_zero()) {
            return Err(Error::Input(format!("log digit {} is below 1", pos + 1)));
        }
        Ok(DigitSequence::LogSpace(digits))
    }

    pub fn mode(&self) -> DigitMode {
        match self {
            DigitSequence::Exact(_) => DigitMode::Exact,
            DigitSequence::LogSpace(_) => DigitMode::LogSpace,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DigitSequence::Exact(d) => d.len(),
            DigitSequence::LogSpace(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exact_digits(&self) -> Result<&[BigUint]> {
        match self {
            DigitSequence::Exact(d) => Ok(d),
            DigitSequence::LogSpace(_) => Err(Error::Mode {
                expected: "exact",
                found: "log-space",
            }),
        }
    }

    /// Digits as log scalars; defined in both modes.
    pub fn log_digits(&self) -> Vec<LogScalar> {
        match self {
            DigitSequence::Exact(d) => d.iter().map(LogScalar::from_biguint).collect(),
            DigitSequence::LogSpace(d) => d.clone(),
        }
    }

    /// Extends an exact sequence by one digit.
    pub fn pushed(&self, digit: BigUint) -> Result<Self> {
        let mut d = self.exact_digits()?.to_vec();
        d.push(digit);
        Self::exact(d)
    }
}

/// (p_{n-1}, q_{n-1}, p_n, q_n) at depth n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergents {
    pub p_prev: BigInt,
    pub q_prev: BigInt,
    pub p_cur: BigInt,
    pub q_cur: BigInt,
    pub depth: usize,
}

impl Convergents {
    fn seed() -> Self {
        Convergents {
            p_prev: BigInt::one(),
            q_prev: BigInt::zero(),
            p_cur: BigInt::zero(),
            q_cur: BigInt::one(),
            depth: 0,
        }
    }

    fn step(&self, a: &BigUint) -> Self {
        let a = BigInt::from_biguint(Sign::Plus, a.clone());
        Convergents {
            p_prev: self.p_cur.clone(),
            q_prev: self.q_cur.clone(),
            p_cur: &a * &self.p_cur + &self.p_prev,
            q_cur: &a * &self.q_cur + &self.q_prev,
            depth: self.depth + 1,
        }
    }

    /// p_n q_{n-1} - p_{n-1} q_n, which equals (-1)^{n-1}.
    pub fn determinant(&self) -> BigInt {
        &self.p_cur * &self.q_prev - &self.p_prev * &self.q_cur
    }

    pub fn value(&self) -> Rational {
        Rational::new(self.p_cur.clone(), self.q_cur.clone())
    }
}

/// Convergents for every prefix a_1..a_k, k = 1..=n.
pub fn convergents_of(digits: &DigitSequence) -> Result<Vec<Convergents>> {
    let d = digits.exact_digits()?;
    let mut out = Vec::with_capacity(d.len());
    let mut cur = Convergents::seed();
    for a in d {
        cur = cur.step(a);
        out.push(cur.clone());
    }
    Ok(out)
}

fn last_convergents(d: &[BigUint]) -> Convergents {
    d.iter().fold(Convergents::seed(), |c, a| c.step(a))
}

/// A cylinder I_n(a_1..a_n) with its half-open interval [lo, hi).
#[derive(Clone, Debug, PartialEq)]
pub struct Cylinder {
    pub digits: DigitSequence,
    pub convergents: Convergents,
    pub lo: Rational,
    pub hi: Rational,
}

impl Cylinder {
    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x < &self.hi
    }

    /// Proper containment of `inner` in `self`.
    pub fn strictly_contains(&self, inner: &Cylinder) -> bool {
        self.lo <= inner.lo && inner.hi <= self.hi && (self.lo != inner.lo || self.hi != inner.hi)
    }
}

pub fn cylinder_of(digits: &DigitSequence) -> Result<Cylinder> {
    let d = digits.exact_digits()?;
    if d.is_empty() {
        return Err(Error::Input("cylinder needs at least one digit".into()));
    }
    let c = last_convergents(d);
    let a = Rational::new(c.p_cur.clone(), c.q_cur.clone());
    let b = Rational::new(&c.p_cur + &c.p_prev, &c.q_cur + &c.q_prev);
    let (lo, hi) = if c.depth.is_multiple_of(2) {
        (a, b)
    } else {
        (b, a)
    };
    Ok(Cylinder {
        digits: digits.clone(),
        convergents: c,
        lo,
        hi,
    })
}

/// [a_1, ..., a_n] = p_n / q_n; the empty sequence is 0.
pub fn value_of(digits: &DigitSequence) -> Result<Rational> {
    let d = digits.exact_digits()?;
    if d.is_empty() {
        return Ok(Rational::zero());
    }
    Ok(last_convergents(d).value())
}

/// Gauss-map iteration T(x) = 1/x mod 1 on a rational num/den in [0, 1).
#[derive(Clone, Debug)]
pub(crate) struct GaussIter {
    num: BigUint,
    den: BigUint,
}

impl GaussIter {
    pub(crate) fn new(x: &Rational) -> Self {
        GaussIter {
            num: x.numer().magnitude().clone(),
            den: x.denom().magnitude().clone(),
        }
    }

    /// The current remainder T^k(x).
    pub(crate) fn remainder(&self) -> Rational {
        Rational::new(
            BigInt::from_biguint(Sign::Plus, self.num.clone()),
            BigInt::from_biguint(Sign::Plus, self.den.clone()),
        )
    }
}

impl Iterator for GaussIter {
    type Item = BigUint;

    fn next(&mut self) -> Option<BigUint> {
        if self.num.is_zero() {
            return None;
        }
        let (a, r) = self.den.div_rem(&self.num);
        self.den = std::mem::replace(&mut self.num, r);
        Some(a)
    }
}

fn check_unit_interval(x: &Rational) -> Result<()> {
    if x.is_negative() || x >= &Rational::one() {
        return Err(Error::Domain(format!("x = {x} is outside [0, 1)")));
    }
    Ok(())
}

/// The longest digit prefix (at most `max_depth`) shared by every point of
/// `[x - radius, x + radius] ∩ [0, 1)`.
///
/// With `radius = 0` this is the exact expansion of `x`, which for a
/// rational terminates with a last digit >= 2.
pub fn expand_certified(
    x: &Rational,
    max_depth: usize,
    radius: &Rational,
) -> Result<DigitSequence> {
    check_unit_interval(x)?;
    if radius.is_negative() {
        return Err(Error::Input("radius must be >= 0".into()));
    }
    if radius.is_zero() {
        return Ok(DigitSequence::Exact(
            GaussIter::new(x).take(max_depth).collect(),
        ));
    }
    let lo = x - radius;
    let hi = x + radius;
    if !lo.is_positive() {
        // The interval reaches 0, where digits are unbounded.
        return Ok(DigitSequence::empty());
    }
    let mut lo_digits = GaussIter::new(&lo);
    if hi >= Rational::one() {
        // Points just below 1 all start with a_1 = 1 and nothing more is shared.
        let first = lo_digits.next();
        let shared = max_depth > 0 && first.as_ref().is_some_and(|d| d.is_one());
        return Ok(DigitSequence::Exact(if shared {
            vec![BigUint::one()]
        } else {
            vec![]
        }));
    }
    let hi_digits = GaussIter::new(&hi);
    let digits = lo_digits
        .zip(hi_digits)
        .take(max_depth)
        .take_while(|(a, b)| a == b)
        .map(|(a, _)| a)
        .collect();
    Ok(DigitSequence::Exact(digits))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LegendreHit {
    pub p: String,
    pub q: u64,
    pub is_convergent: bool,
}

/// Every irreducible p/q with q <= q_max and |x - p/q| < 1/(2 q^2), each
/// flagged by whether it is a convergent of x.
pub fn legendre_check(x: &Rational, q_max: u64) -> Result<Vec<LegendreHit>> {
    check_unit_interval(x)?;
    let digits = expand_certified(x, usize::MAX, &Rational::zero())?;
    // p_0/q_0 = 0/1 is included; it qualifies whenever x < 1/2.
    let convergents: HashSet<(BigInt, BigInt)> = convergents_of(&digits)?
        .into_iter()
        .map(|c| (c.p_cur, c.q_cur))
        .chain([(BigInt::zero(), BigInt::one())])
        .collect();
    let num = x.numer();
    let den = x.denom();
    let mut hits = Vec::new();
    for q in 1..=q_max {
        let qb = BigInt::from(q);
        let floor = (num * &qb).div_floor(den);
        for p in [floor.clone(), floor + 1] {
            if p.is_negative() || p > qb || !p.gcd(&qb).is_one() {
                continue;
            }
            // |x - p/q| < 1/(2q^2)  <=>  2q |num q - p den| < den
            let gap = (num * &qb - &p * den).abs();
            if BigInt::from(2 * q) * gap < *den {
                let is_convergent = convergents.contains(&(p.clone(), qb.clone()));
                hits.push(LegendreHit {
                    p: p.to_string(),
                    q,
                    is_convergent,
                });
            }
        }
    }
    Ok(hits)
}

/// Per-depth outcome of the classical inequalities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DepthBounds {
    pub depth: usize,
    /// q_n >= 2^{(n-1)/2}
    pub q_growth: bool,
    /// prod a_k <= q_n
    pub product_lower: bool,
    /// q_n <= 2^n prod a_k
    pub product_upper: bool,
    /// 1/(3 a_{n+1} q_n^2) < |x - p_n/q_n|; `None` when x has no digit n+1.
    pub approx_lower: Option<bool>,
    /// |x - p_n/q_n| < 1/(a_{n+1} q_n^2)
    pub approx_upper: Option<bool>,
    /// |x - p_n/q_n| = 1/(q_n (q_{n+1} + T^{n+1}(x) q_n)), checked exactly.
    pub distance_identity: Option<bool>,
}

impl DepthBounds {
    pub fn all_hold(&self) -> bool {
        self.q_growth
            && self.product_lower
            && self.product_upper
            && self.approx_lower.unwrap_or(true)
            && self.approx_upper.unwrap_or(true)
            && self.distance_identity.unwrap_or(true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassicalBoundsReport {
    pub depths: Vec<DepthBounds>,
}

impl ClassicalBoundsReport {
    pub fn all_hold(&self) -> bool {
        self.depths.iter().all(DepthBounds::all_hold)
    }
}

/// Checks the growth, product and approximation inequalities at every
/// depth of `digits`, which must be a prefix of the expansion of `x`.
pub fn verify_classical_bounds(
    digits: &DigitSequence,
    x: &Rational,
) -> Result<ClassicalBoundsReport> {
    check_unit_interval(x)?;
    let d = digits.exact_digits()?;
    let n = d.len();
    // Expansion of x one digit past the prefix, with the remainders T^k(x).
    let mut it = GaussIter::new(x);
    let mut expansion = Vec::with_capacity(n + 1);
    let mut remainders = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        match it.next() {
            Some(a) => {
                expansion.push(a);
                remainders.push(it.remainder());
            }
            None => break,
        }
    }
    if expansion.len() < n || expansion[..n] != *d {
        return Err(Error::Input(
            "digits are not a prefix of the expansion of x".into(),
        ));
    }

    let mut depths = Vec::with_capacity(n);
    let mut conv = Convergents::seed();
    let mut product = BigInt::one();
    for k in 0..n {
        conv = conv.step(&d[k]);
        let depth = k + 1;
        let a = BigInt::from_biguint(Sign::Plus, d[k].clone());
        product *= &a;
        let q = &conv.q_cur;
        let q_sq = q * q;
        let q_growth = q_sq >= (BigInt::one() << (depth - 1));
        let product_lower = &product <= q;
        let product_upper = q <= &(&product << depth);

        let (approx_lower, approx_upper, distance_identity) = match expansion.get(depth) {
            Some(next) => {
                let next = BigInt::from_biguint(Sign::Plus, next.clone());
                let dist = (x - conv.value()).abs();
                let lower = Rational::new(BigInt::one(), BigInt::from(3) * &next * &q_sq);
                let upper = Rational::new(BigInt::one(), &next * &q_sq);
                let q_next = &next * q + &conv.q_prev;
                let t_next = &remainders[depth];
                let exact = Rational::one()
                    / (Rational::from_integer(q.clone())
                        * (Rational::from_integer(q_next)
                            + t_next * Rational::from_integer(q.clone())));
                (Some(lower < dist), Some(dist < upper), Some(dist == exact))
            }
            None => (None, None, None),
        };
        depths.push(DepthBounds {
            depth,
            q_growth,
            product_lower,
            product_upper,
            approx_lower,
            approx_upper,
            distance_identity,
        });
    }
    Ok(ClassicalBoundsReport { depths })
}

/// Parses "p/q", an integer, or a finite decimal such as "0.625" exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("malformed rational '{text}'"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in '{text}'")));
        }
        return Ok(Rational::new(p, q));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits == "-" || digits == "+" {
        return Err(bad());
    } else {
        digits
    };
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}
