//! Nonnegative reals carried by their natural logarithm.
//!
//! Quantities like `e^{φ(n)}` with `φ(n) = 2^60` are far outside any float
//! range, but their logarithms are ordinary numbers. Products become sums
//! of logs and sums become log-sum-exp; every operation keeps the log in
//! double-double precision, so the relative error of the represented value
//! stays near 2^-100 per operation.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};

use crate::dd::{DoubleDouble, LN10, LN2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogScalar {
    log_value: DoubleDouble,
    zero: bool,
}

impl LogScalar {
    pub const ZERO: Self = Self {
        log_value: DoubleDouble::NEG_INFINITY,
        zero: true,
    };
    pub const ONE: Self = Self {
        log_value: DoubleDouble::ZERO,
        zero: false,
    };

    /// The scalar whose natural logarithm is `log_value`.
    pub fn from_log(log_value: DoubleDouble) -> Self {
        if log_value.hi() == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self {
            log_value,
            zero: false,
        }
    }

    pub fn from_log_f64(log_value: f64) -> Self {
        Self::from_log(DoubleDouble::from(log_value))
    }

    pub fn from_value(v: DoubleDouble) -> Result<Self> {
        if v.is_nan() || v.hi() < 0.0 {
            return Err(Error::Domain(format!(
                "log scalar of negative value {}",
                v.to_f64()
            )));
        }
        if v.hi() == 0.0 {
            return Ok(Self::ZERO);
        }
        Ok(Self::from_log(v.ln()))
    }

    pub fn from_f64(v: f64) -> Result<Self> {
        Self::from_value(DoubleDouble::from(v))
    }

    pub fn from_u64(v: u64) -> Self {
        if v == 0 {
            Self::ZERO
        } else {
            Self::from_log(DoubleDouble::from(v).ln())
        }
    }

    pub fn from_biguint(v: &BigUint) -> Self {
        let bits = v.bits();
        if bits == 0 {
            return Self::ZERO;
        }
        let shift = bits.saturating_sub(106);
        let top: BigUint = v >> shift;
        let top = top
            .to_u128()
            .expect("at most 106 bits remain after the shift");
        let log = DoubleDouble::from_u128(top).ln() + LN2.mul_f64(shift as f64);
        Self::from_log(log)
    }

    /// Parses a decimal literal that may lie far outside the `f64` range
    /// (for example `1e5000`).
    pub fn parse_decimal(text: &str) -> Result<Self> {
        let (m, e) = DoubleDouble::parse_decimal_parts(text)?;
        if m.hi() < 0.0 {
            return Err(Error::Domain(format!("negative value '{text}'")));
        }
        if m.hi() == 0.0 {
            return Ok(Self::ZERO);
        }
        Ok(Self::from_log(m.ln() + LN10.mul_f64(e as f64)))
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Natural log of the value; `-inf` for zero.
    pub fn ln(&self) -> DoubleDouble {
        if self.zero {
            DoubleDouble::NEG_INFINITY
        } else {
            self.log_value
        }
    }

    pub fn ln_f64(&self) -> f64 {
        self.ln().to_f64()
    }

    /// The represented value; `inf` when it overflows.
    pub fn value(&self) -> DoubleDouble {
        if self.zero {
            DoubleDouble::ZERO
        } else {
            self.log_value.exp()
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.value().to_f64()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.zero || other.zero {
            return Self::ZERO;
        }
        Self::from_log(self.log_value + other.log_value)
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        if other.zero {
            return Err(Error::Numeric("division of log scalar by zero".into()));
        }
        if self.zero {
            return Ok(Self::ZERO);
        }
        Ok(Self::from_log(self.log_value - other.log_value))
    }

    /// self^t for t >= 0.
    pub fn powf(&self, t: f64) -> Self {
        if t == 0.0 {
            return Self::ONE;
        }
        if self.zero {
            return Self::ZERO;
        }
        Self::from_log(self.log_value.mul_f64(t))
    }

    /// self + other via log-sum-exp.
    pub fn add(&self, other: &Self) -> Self {
        if self.zero {
            return *other;
        }
        if other.zero {
            return *self;
        }
        let (big, small) = if self.log_value >= other.log_value {
            (self.log_value, other.log_value)
        } else {
            (other.log_value, self.log_value)
        };
        let gap = small - big;
        if gap.hi() < -800.0 {
            return Self::from_log(big);
        }
        Self::from_log(big + gap.exp().ln_1p())
    }

    /// self - other, requiring self >= other.
    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        if other.zero {
            return Ok(*self);
        }
        if self.zero || self.log_value < other.log_value {
            return Err(Error::Numeric(
                "log scalar subtraction would go negative".into(),
            ));
        }
        if self.log_value == other.log_value {
            return Ok(Self::ZERO);
        }
        let gap = other.log_value - self.log_value;
        if gap.hi() < -800.0 {
            return Ok(*self);
        }
        // ln(1 - e^gap) with gap < 0.
        let frac = DoubleDouble::ONE - gap.exp();
        Ok(Self::from_log(self.log_value + frac.ln()))
    }

    /// Relative difference of the represented values, measured in log space.
    pub fn log_distance(&self, other: &Self) -> f64 {
        match (self.zero, other.zero) {
            (true, true) => 0.0,
            (true, false) | (false, true) => f64::INFINITY,
            _ => (self.log_value - other.log_value).abs().to_f64(),
        }
    }
}

impl PartialOrd for LogScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self.zero, other.zero) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            _ => self.log_value.partial_cmp(&other.log_value),
        }
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            write!(f, "0")
        } else {
            write!(f, "exp({})", self.log_value.to_sci_string(18))
        }
    }
}

impl Serialize for LogScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // Serialized as the natural log of the value.
        s.serialize_f64(self.ln_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiply_adds_logs() {
        let a = LogScalar::from_log_f64(1e18);
        let b = LogScalar::from_log_f64(3.0);
        let p = a.mul(&b);
        assert_eq!((p.ln() - DoubleDouble::from(1e18)).to_f64(), 3.0);
        assert!(a.mul(&LogScalar::ZERO).is_zero());
    }

    #[test]
    fn add_is_log_sum_exp() {
        let a = LogScalar::from_f64(3.0).unwrap();
        let b = LogScalar::from_f64(5.0).unwrap();
        let s = a.add(&b);
        assert!((s.to_f64() - 8.0).abs() < 1e-14);
        // e^6 + 3 at high precision.
        let c = LogScalar::from_log_f64(6.0);
        let t = c.add(&LogScalar::from_u64(3));
        let want = (6f64.exp() + 3.0).ln();
        assert!((t.ln_f64() - want).abs() < 1e-14);
        assert_eq!(LogScalar::ZERO.add(&a), a);
    }

    #[test]
    fn subtraction_inverts_addition() {
        let a = LogScalar::from_log_f64(40.0);
        let b = LogScalar::from_log_f64(39.5);
        let back = a.add(&b).checked_sub(&b).unwrap();
        assert!(back.log_distance(&a) < 1e-28);
        assert!(b.checked_sub(&a).is_err());
        assert!(a.checked_sub(&a).unwrap().is_zero());
    }

    #[test]
    fn relative_error_per_operation_is_tiny() {
        // 1000 alternating multiply/divide steps must return to the start.
        let x = LogScalar::from_log_f64(12345.678);
        let y = LogScalar::from_log_f64(0.1);
        let mut z = x;
        for _ in 0..1000 {
            z = z.mul(&y);
        }
        for _ in 0..1000 {
            z = z.checked_div(&y).unwrap();
        }
        assert!(z.log_distance(&x) <= 1e-20);
    }

    #[test]
    fn big_integer_log() {
        let v = BigUint::from(10u32).pow(400);
        let l = LogScalar::from_biguint(&v);
        let want = LN10.mul_f64(400.0);
        assert!((l.ln() - want).abs().to_f64() < 1e-27);
        assert!(LogScalar::from_biguint(&BigUint::from(0u32)).is_zero());
        assert_eq!(LogScalar::from_biguint(&BigUint::from(1u32)).ln_f64(), 0.0);
    }

    #[test]
    fn parses_huge_literals() {
        let l = LogScalar::parse_decimal("2.5e1000").unwrap();
        let want = 2.5f64.ln() + 1000.0 * std::f64::consts::LN_10;
        assert!((l.ln_f64() - want).abs() < 1e-10);
        assert!(LogScalar::parse_decimal("-1").is_err());
    }

    #[test]
    fn ordering() {
        assert!(LogScalar::ZERO < LogScalar::ONE);
        assert!(LogScalar::from_log_f64(2.0) > LogScalar::from_log_f64(1.0));
    }
}
