//! Signed fixed-point decimal with 18 fractional digits.
//!
//! All kernel math runs on [`Fixed`] so that results are bit-identical across
//! platforms. Products and quotients are formed in a 256-bit intermediate and
//! rounded to nearest, ties away from zero. Nothing wraps: every fallible
//! operation returns [`FixedError::Overflow`] instead.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const DECIMALS: u32 = 18;
pub const SCALE: i128 = 1_000_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixedError {
    #[error("invalid decimal {0:?}")]
    Parse(String),
    #[error("fixed-point overflow")]
    Overflow,
    #[error("division by zero")]
    DivisionByZero,
}

pub type FixedResult<T> = Result<T, FixedError>;

/// A decimal value stored as `raw / 10^18`.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed(i128);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);
    pub const ONE: Fixed = Fixed(SCALE);
    /// Smallest positive value, 10^-18.
    pub const EPSILON: Fixed = Fixed(1);
    pub const MAX: Fixed = Fixed(i128::MAX);
    pub const MIN: Fixed = Fixed(i128::MIN);

    pub const fn from_raw(raw: i128) -> Self {
        Fixed(raw)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub const fn from_int(n: i64) -> Self {
        // |i64| * 10^18 < 2^127
        Fixed(n as i128 * SCALE)
    }

    /// `num / den`, rounded to nearest.
    pub fn from_ratio(num: i64, den: i64) -> FixedResult<Self> {
        Fixed::from_int(num).checked_div(Fixed::from_int(den))
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn checked_add(self, rhs: Fixed) -> FixedResult<Fixed> {
        self.0.checked_add(rhs.0).map(Fixed).ok_or(FixedError::Overflow)
    }

    pub fn checked_sub(self, rhs: Fixed) -> FixedResult<Fixed> {
        self.0.checked_sub(rhs.0).map(Fixed).ok_or(FixedError::Overflow)
    }

    pub fn checked_neg(self) -> FixedResult<Fixed> {
        self.0.checked_neg().map(Fixed).ok_or(FixedError::Overflow)
    }

    pub fn checked_abs(self) -> FixedResult<Fixed> {
        self.0.checked_abs().map(Fixed).ok_or(FixedError::Overflow)
    }

    pub fn checked_mul(self, rhs: Fixed) -> FixedResult<Fixed> {
        mul_div_round(self.0, rhs.0, SCALE).map(Fixed)
    }

    pub fn checked_div(self, rhs: Fixed) -> FixedResult<Fixed> {
        if rhs.0 == 0 {
            return Err(FixedError::DivisionByZero);
        }
        mul_div_round(self.0, SCALE, rhs.0).map(Fixed)
    }

    /// `self * mul / div` with a single rounding step.
    pub fn mul_div(self, mul: Fixed, div: Fixed) -> FixedResult<Fixed> {
        if div.0 == 0 {
            return Err(FixedError::DivisionByZero);
        }
        mul_div_round(self.0, mul.0, div.0).map(Fixed)
    }

    /// Exact multiplication by an integer.
    pub fn mul_int(self, n: i64) -> FixedResult<Fixed> {
        self.0.checked_mul(n as i128).map(Fixed).ok_or(FixedError::Overflow)
    }

    /// Division by a non-zero integer, rounded to nearest.
    pub fn div_int(self, n: i64) -> FixedResult<Fixed> {
        if n == 0 {
            return Err(FixedError::DivisionByZero);
        }
        mul_div_round(self.0, 1, n as i128).map(Fixed)
    }

    /// Nearest `f64`; used only for plotting and float cross-checks.
    pub fn to_f64(self) -> f64 {
        self.to_string().parse().expect("decimal rendering is valid f64 text")
    }

    pub fn from_decimal_str(s: &str) -> FixedResult<Fixed> {
        let err = || FixedError::Parse(s.to_owned());
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (body, None),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let mut magnitude: u128 = 0;
        for b in int_part.bytes() {
            magnitude = magnitude
                .checked_mul(10)
                .and_then(|m| m.checked_add(u128::from(b - b'0')))
                .ok_or(FixedError::Overflow)?;
        }
        magnitude = magnitude.checked_mul(SCALE as u128).ok_or(FixedError::Overflow)?;
        if let Some(frac) = frac_part {
            if frac.is_empty() || frac.len() > DECIMALS as usize || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            let mut f: u128 = 0;
            for b in frac.bytes() {
                f = f * 10 + u128::from(b - b'0');
            }
            f *= 10u128.pow(DECIMALS - frac.len() as u32);
            magnitude = magnitude.checked_add(f).ok_or(FixedError::Overflow)?;
        }
        apply_sign(magnitude, negative).map(Fixed)
    }
}

fn apply_sign(magnitude: u128, negative: bool) -> FixedResult<i128> {
    const MIN_MAGNITUDE: u128 = 1 << 127;
    match (negative, magnitude.cmp(&MIN_MAGNITUDE)) {
        (_, Ordering::Less) if negative => Ok(-(magnitude as i128)),
        (_, Ordering::Less) => Ok(magnitude as i128),
        (true, Ordering::Equal) => Ok(i128::MIN),
        _ => Err(FixedError::Overflow),
    }
}

/// Full 128x128 -> 256-bit product as (hi, lo).
fn widening_mul(a: u128, b: u128) -> (u128, u128) {
    const LOW: u128 = u64::MAX as u128;
    let (a_hi, a_lo) = (a >> 64, a & LOW);
    let (b_hi, b_lo) = (b >> 64, b & LOW);

    let ll = a_lo * b_lo;
    let lh = a_lo * b_hi;
    let hl = a_hi * b_lo;
    let hh = a_hi * b_hi;

    let mid = (ll >> 64) + (lh & LOW) + (hl & LOW);
    let lo = (ll & LOW) | (mid << 64);
    let hi = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    (hi, lo)
}

/// Divides the 256-bit value (hi, lo) by `d`. Requires `hi < d` and
/// `d <= 2^127`, which keeps the quotient and every partial remainder in
/// 128 bits.
fn wide_div_rem(hi: u128, lo: u128, d: u128) -> (u128, u128) {
    debug_assert!(hi < d && d <= 1 << 127);
    let mut rem = hi;
    let mut quot = 0u128;
    for bit in (0..128).rev() {
        rem = (rem << 1) | ((lo >> bit) & 1);
        if rem >= d {
            rem -= d;
            quot |= 1 << bit;
        }
    }
    (quot, rem)
}

/// round(x * y / z), nearest with ties away from zero.
fn mul_div_round(x: i128, y: i128, z: i128) -> FixedResult<i128> {
    if z == 0 {
        return Err(FixedError::DivisionByZero);
    }
    let negative = (x < 0) ^ (y < 0) ^ (z < 0);
    let (xm, ym, zm) = (x.unsigned_abs(), y.unsigned_abs(), z.unsigned_abs());
    let (hi, lo) = widening_mul(xm, ym);
    let (mut quot, rem) = if hi == 0 {
        (lo / zm, lo % zm)
    } else if hi >= zm {
        return Err(FixedError::Overflow);
    } else {
        wide_div_rem(hi, lo, zm)
    };
    if rem >= zm - rem {
        quot = quot.checked_add(1).ok_or(FixedError::Overflow)?;
    }
    if quot == 0 {
        return Ok(0);
    }
    apply_sign(quot, negative)
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        self.checked_add(rhs).expect("fixed-point add overflow")
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        self.checked_sub(rhs).expect("fixed-point sub overflow")
    }
}

impl Neg for Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        self.checked_neg().expect("fixed-point neg overflow")
    }
}

impl FromStr for Fixed {
    type Err = FixedError;
    fn from_str(s: &str) -> FixedResult<Fixed> {
        Fixed::from_decimal_str(s)
    }
}

/// Canonical decimal text: no exponent, no trailing fractional zeros, and
/// the `.` only when a fractional part is present.
impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let magnitude = self.0.unsigned_abs();
        let int_part = magnitude / SCALE as u128;
        let frac_part = magnitude % SCALE as u128;
        let sign = if self.0 < 0 { "-" } else { "" };
        if frac_part == 0 {
            return write!(f, "{sign}{int_part}");
        }
        let digits = format!("{frac_part:018}");
        write!(f, "{sign}{int_part}.{}", digits.trim_end_matches('0'))
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed({self})")
    }
}

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fixed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Fixed, D::Error> {
        struct DecimalText;

        impl de::Visitor<'_> for DecimalText {
            type Value = Fixed;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal string such as \"0.15\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Fixed, E> {
                Fixed::from_decimal_str(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_str(DecimalText)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(s: &str) -> Fixed {
        s.parse().unwrap()
    }

    #[test]
    fn parses_spec_examples() {
        assert_eq!(fx("1.5").raw(), 1_500_000_000_000_000_000);
        assert_eq!(fx("0").raw(), 0);
        assert_eq!(fx("-0.000000000000000001").raw(), -1);
    }

    #[test]
    fn rejects_malformed_text() {
        for bad in ["", "-", "1.", ".5", "1e5", "1.2.3", "abc", " 1", "1.0000000000000000001", "--1"] {
            assert!(matches!(Fixed::from_decimal_str(bad), Err(FixedError::Parse(_))), "{bad:?} should not parse");
        }
    }

    #[test]
    fn range_limits() {
        assert_eq!(fx("170141183460469231731.687303715884105727"), Fixed::MAX);
        assert_eq!(fx("-170141183460469231731.687303715884105728"), Fixed::MIN);
        assert_eq!(Fixed::from_decimal_str("170141183460469231731.687303715884105728"), Err(FixedError::Overflow));
        assert_eq!(Fixed::from_decimal_str("999999999999999999999999"), Err(FixedError::Overflow));
    }

    #[test]
    fn display_is_canonical() {
        for s in ["1.5", "0", "-0.000000000000000001", "3", "-12.25", "0.333333333333333333"] {
            assert_eq!(fx(s).to_string(), s);
        }
        assert_eq!(fx("-0").to_string(), "0");
        assert_eq!(fx("01.50").to_string(), "1.5");
        assert_eq!(Fixed::MIN.to_string(), "-170141183460469231731.687303715884105728");
    }

    #[test]
    fn mul_examples() {
        assert_eq!(fx("1.5").checked_mul(Fixed::from_int(2)).unwrap(), Fixed::from_int(3));
        assert_eq!(Fixed::EPSILON.checked_mul(fx("0.4")).unwrap(), Fixed::ZERO);
        assert_eq!(Fixed::EPSILON.checked_mul(fx("0.5")).unwrap(), Fixed::EPSILON);
        assert_eq!((-Fixed::EPSILON).checked_mul(fx("0.5")).unwrap(), -Fixed::EPSILON);
        assert_eq!(Fixed::MAX.checked_mul(Fixed::from_int(2)), Err(FixedError::Overflow));
    }

    #[test]
    fn div_examples() {
        assert_eq!(Fixed::ONE.checked_div(Fixed::from_int(3)).unwrap(), fx("0.333333333333333333"));
        assert_eq!(Fixed::from_int(2).checked_div(Fixed::from_int(3)).unwrap(), fx("0.666666666666666667"));
        assert_eq!(fx("0.2").checked_div(fx("0.5")).unwrap(), fx("0.4"));
        assert_eq!(fx("-7.3").checked_div(fx("-7.3")).unwrap(), Fixed::ONE);
        assert_eq!(Fixed::ONE.checked_div(Fixed::ZERO), Err(FixedError::DivisionByZero));
        assert_eq!(Fixed::MAX.checked_div(fx("0.5")), Err(FixedError::Overflow));
    }

    #[test]
    fn large_operands_use_wide_path() {
        let big = fx("100000000000");
        assert_eq!(big.checked_mul(big).unwrap_err(), FixedError::Overflow);
        let d = fx("2000000");
        assert_eq!(d.mul_div(d, fx("4000000")).unwrap(), fx("1000000"));
        assert_eq!(fx("123456789.123456789").checked_div(fx("123456789.123456789")).unwrap(), Fixed::ONE);
    }

    #[test]
    fn widening_mul_matches_u128_when_small() {
        assert_eq!(widening_mul(u64::MAX as u128, u64::MAX as u128), (0, (u64::MAX as u128) * (u64::MAX as u128)));
        assert_eq!(widening_mul(u128::MAX, 2), (1, u128::MAX - 1));
        assert_eq!(widening_mul(u128::MAX, u128::MAX), (u128::MAX - 1, 1));
    }

    #[test]
    fn serde_uses_decimal_strings() {
        let v: Fixed = serde_json::from_str("\"0.15\"").unwrap();
        assert_eq!(v, fx("0.15"));
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"0.15\"");
        assert!(serde_json::from_str::<Fixed>("0.15").is_err());
    }
}
