//! Double-double arithmetic.
//!
//! A value is the unevaluated sum `hi + lo` of two `f64`s with
//! `|lo| <= ulp(hi) / 2`, which carries about 106 significant bits. The
//! basic operations use the error-free transformations of Dekker and Knuth;
//! `exp` and `ln` are accurate to a few units in the 2^-104 place.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

pub const LN2: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::LN_2,
    lo: 2.3190468138462996e-17,
};

pub const LN10: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::LN_10,
    lo: -2.1707562233822494e-16,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };
    pub const INFINITY: Self = Self {
        hi: f64::INFINITY,
        lo: 0.0,
    };
    pub const NEG_INFINITY: Self = Self {
        hi: f64::NEG_INFINITY,
        lo: 0.0,
    };

    /// Builds a value from two parts, renormalizing them.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    pub fn is_nan(self) -> bool {
        self.hi.is_nan()
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn from_u128(v: u128) -> Self {
        fn exact_u64(u: u64) -> DoubleDouble {
            let hi = u as f64;
            // |u - hi| <= 2^10, so the residual is exact in f64.
            let rem = u as i128 - hi as i128;
            DoubleDouble::new(hi, rem as f64)
        }
        let high = exact_u64((v >> 64) as u64).ldexp(64);
        high + exact_u64(v as u64)
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Self {
        self / Self::from(b)
    }

    /// Multiplies by 2^k exactly (barring overflow or underflow).
    pub fn ldexp(self, k: i32) -> Self {
        let mut out = self;
        let mut k = k;
        while k != 0 {
            let step = k.clamp(-1000, 1000);
            let scale = 2f64.powi(step);
            out = Self {
                hi: out.hi * scale,
                lo: out.lo * scale,
            };
            k -= step;
        }
        out
    }

    pub fn floor(self) -> Self {
        let f = self.hi.floor();
        if f == self.hi {
            let (hi, lo) = quick_two_sum(f, self.lo.floor());
            Self { hi, lo }
        } else {
            Self { hi: f, lo: 0.0 }
        }
    }

    pub fn powi(self, n: i64) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Self::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        if n < 0 {
            Self::ONE / acc
        } else {
            acc
        }
    }

    /// e^x.
    pub fn exp(self) -> Self {
        if self.is_nan() {
            return self;
        }
        if self.hi > 709.78 {
            return Self::INFINITY;
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return Self::ONE;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).ldexp(-10);
        // expm1(r) by Taylor series, then expm1(2r) = expm1(r) * (2 + expm1(r)).
        let mut term = r;
        let mut sum = r;
        for i in 2..40 {
            term = term * r / Self::from(i as f64);
            sum += term;
            if term.hi.abs() <= 1e-34 * sum.hi.abs() {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * (sum + Self::from(2.0));
        }
        (sum + Self::ONE).ldexp(k as i32)
    }

    /// Natural logarithm; `-inf` at zero and NaN for negative input.
    pub fn ln(self) -> Self {
        if self.is_nan() || self.hi < 0.0 {
            return Self {
                hi: f64::NAN,
                lo: 0.0,
            };
        }
        if self.hi == 0.0 {
            return Self::NEG_INFINITY;
        }
        if self.hi.is_infinite() {
            return Self::INFINITY;
        }
        // Reduce to m in [1, 2) so e^{-y} never goes subnormal.
        let e = self.hi.log2().floor() as i32;
        let m = self.ldexp(-e);
        // Each Newton step y + m e^{-y} - 1 doubles the correct bits of the seed.
        let mut y = Self::from(m.hi.ln());
        for _ in 0..2 {
            y = y + m * (-y).exp() - Self::ONE;
        }
        y + LN2.mul_f64(e as f64)
    }

    /// ln(1 + x) for x >= 0, accurate when x is tiny.
    pub fn ln_1p(self) -> Self {
        if self.hi.abs() < 1e-10 {
            // x - x^2/2 + x^3/3 - x^4/4 suffices below 1e-10.
            let x2 = self * self;
            let x3 = x2 * self;
            return self - x2.mul_f64(0.5) + x3 / Self::from(3.0) - (x3 * self).mul_f64(0.25);
        }
        (Self::ONE + self).ln()
    }

    /// Formats in scientific notation with `significant` digits.
    pub fn to_sci_string(self, significant: usize) -> String {
        let significant = significant.max(1);
        if self.is_nan() {
            return "NaN".into();
        }
        if self.hi.is_infinite() {
            return if self.hi > 0.0 {
                "inf".into()
            } else {
                "-inf".into()
            };
        }
        if self.hi < 0.0 {
            return format!("-{}", (-self).to_sci_string(significant));
        }
        if self.hi == 0.0 {
            return format!("{:.*}e0", significant - 1, 0.0);
        }
        let mut e = self.hi.log10().floor() as i32;
        let mut y = self * pow10(-e);
        if y.hi >= 10.0 {
            y = y / Self::from(10.0);
            e += 1;
        } else if y.hi < 1.0 {
            y = y.mul_f64(10.0);
            e -= 1;
        }
        let mut digits = Vec::with_capacity(significant + 1);
        for _ in 0..=significant {
            let d = y.floor().hi.clamp(0.0, 9.0);
            digits.push(d as u8);
            y = (y - Self::from(d)).mul_f64(10.0);
        }
        let round_up = digits.pop().unwrap_or(0) >= 5;
        if round_up {
            let mut i = digits.len();
            loop {
                if i == 0 {
                    digits.insert(0, 1);
                    digits.pop();
                    e += 1;
                    break;
                }
                i -= 1;
                if digits[i] == 9 {
                    digits[i] = 0;
                } else {
                    digits[i] += 1;
                    break;
                }
            }
        }
        let mut s = String::with_capacity(significant + 8);
        s.push((b'0' + digits[0]) as char);
        if significant > 1 {
            s.push('.');
            for d in &digits[1..] {
                s.push((b'0' + d) as char);
            }
        }
        s.push('e');
        s.push_str(&e.to_string());
        s
    }

    /// Parses a decimal literal, returning mantissa and power of ten
    /// separately so that callers can handle values outside the `f64` range.
    pub fn parse_decimal_parts(text: &str) -> Result<(Self, i64)> {
        let t = text.trim();
        let bad = || Error::Parse(format!("malformed number '{text}'"));
        let (neg, body) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let (mant, exp) = match body.find(['e', 'E']) {
            Some(i) => (&body[..i], body[i + 1..].parse::<i64>().map_err(|_| bad())?),
            None => (body, 0),
        };
        if mant.is_empty() {
            return Err(bad());
        }
        let mut m = Self::ZERO;
        let mut scale: i64 = exp;
        let mut seen_point = false;
        let mut any_digit = false;
        let mut used = 0usize;
        for c in mant.chars() {
            match c {
                '.' if !seen_point => seen_point = true,
                '0'..='9' => {
                    any_digit = true;
                    let d = (c as u8 - b'0') as f64;
                    if used < 32 {
                        if m.hi != 0.0 || d != 0.0 {
                            used += 1;
                        }
                        m = m.mul_f64(10.0) + Self::from(d);
                        if seen_point {
                            scale -= 1;
                        }
                    } else if !seen_point {
                        scale += 1;
                    }
                }
                _ => return Err(bad()),
            }
        }
        if !any_digit {
            return Err(bad());
        }
        Ok((if neg { -m } else { m }, scale))
    }

    pub fn parse_decimal(text: &str) -> Result<Self> {
        let (m, e) = Self::parse_decimal_parts(text)?;
        let e = i32::try_from(e)
            .map_err(|_| Error::Parse(format!("exponent out of range in '{text}'")))?;
        Ok(m * pow10(e))
    }
}

/// 10^e in double-double.
pub fn pow10(e: i32) -> DoubleDouble {
    if e >= 0 {
        DoubleDouble::from(10.0).powi(e as i64)
    } else if e < -300 {
        // Split to avoid overflowing the intermediate 10^|e|.
        pow10(e + 300) / DoubleDouble::from(10.0).powi(300)
    } else {
        DoubleDouble::ONE / DoubleDouble::from(10.0).powi(-(e as i64))
    }
}

impl From<f64> for DoubleDouble {
    fn from(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }
}

impl From<u64> for DoubleDouble {
    fn from(v: u64) -> Self {
        Self::from_u128(v as u128)
    }
}

impl From<usize> for DoubleDouble {
    fn from(v: usize) -> Self {
        Self::from_u128(v as u128)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        if !self.hi.is_finite() || !b.hi.is_finite() {
            return Self::from(self.hi + b.hi);
        }
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = quick_two_sum(s, e);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        if !self.hi.is_finite() || !b.hi.is_finite() {
            return Self::from(self.hi * b.hi);
        }
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        if !self.hi.is_finite() || !b.hi.is_finite() || b.hi == 0.0 {
            return Self::from(self.hi / b.hi);
        }
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from(q3)
    }
}

impl AddAssign for DoubleDouble {
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}

impl SubAssign for DoubleDouble {
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sci_string(f.precision().unwrap_or(31) + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: DoubleDouble, b: DoubleDouble, rel: f64) -> bool {
        let d = (a - b).abs().to_f64();
        d <= rel * b.abs().to_f64().max(1e-300)
    }

    #[test]
    fn ln_of_two_matches_constant() {
        let l = DoubleDouble::from(2.0).ln();
        assert!(close(l, LN2, 1e-31), "{l:?}");
        let l10 = DoubleDouble::from(10.0).ln();
        assert!(close(l10, LN10, 1e-31), "{l10:?}");
    }

    #[test]
    fn exp_ln_round_trip() {
        for &x in &[1e-20, 0.3, 1.0, 2.5, 17.0, 123.456, 700.0, -3.0, -300.0] {
            let v = DoubleDouble::from(x);
            let back = v.exp().ln();
            assert!(
                (back - v).abs().to_f64() <= 1e-30 * x.abs().max(1.0),
                "x={x} back={back:?}"
            );
        }
        let e = DoubleDouble::ONE.exp();
        // e = 2.71828182845904523536028747135266...
        let want = DoubleDouble::parse_decimal("2.718281828459045235360287471352662").unwrap();
        assert!(close(e, want, 1e-31));
    }

    #[test]
    fn keeps_small_addend_next_to_large_one() {
        let big = DoubleDouble::from(1.0e18) + DoubleDouble::from(1e-3);
        assert_eq!(big.lo(), 1e-3);
        assert_eq!((big - DoubleDouble::from(1.0e18)).to_f64(), 1e-3);
    }

    #[test]
    fn powi_integral() {
        let p = DoubleDouble::from(3.0).powi(60);
        // 3^60 = 42391158275216203514294433201
        let want = DoubleDouble::parse_decimal("42391158275216203514294433201").unwrap();
        assert!(close(p, want, 1e-31));
        assert_eq!(DoubleDouble::from(2.0).powi(-3).to_f64(), 0.125);
    }

    #[test]
    fn sci_formatting() {
        assert_eq!(
            DoubleDouble::from(2.0).to_sci_string(18),
            "2.00000000000000000e0"
        );
        assert_eq!(DoubleDouble::from(0.125).to_sci_string(3), "1.25e-1");
        assert_eq!(DoubleDouble::from(9.9999).to_sci_string(3), "1.00e1");
        assert_eq!(DoubleDouble::from(-1536.0).to_sci_string(4), "-1.536e3");
        let third = DoubleDouble::ONE / DoubleDouble::from(3.0);
        assert_eq!(third.to_sci_string(18), "3.33333333333333333e-1");
    }

    #[test]
    fn parse_round_trip() {
        let x = DoubleDouble::from(2.0).powi(70) / DoubleDouble::from(7.0);
        let s = x.to_sci_string(32);
        let y = DoubleDouble::parse_decimal(&s).unwrap();
        assert!(close(x, y, 1e-30), "{s}");
        assert!(DoubleDouble::parse_decimal("1.2.3").is_err());
        assert!(DoubleDouble::parse_decimal("e5").is_err());
        let (m, e) = DoubleDouble::parse_decimal_parts("1.5e400").unwrap();
        assert_eq!((m.to_f64(), e), (15.0, 399));
    }

    #[test]
    fn floor_respects_low_part() {
        let x = DoubleDouble::new(3.0, -1e-20);
        assert_eq!(x.floor().to_f64(), 2.0);
        assert_eq!(DoubleDouble::from(3.7).floor().to_f64(), 3.0);
    }
}
