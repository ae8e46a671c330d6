//! Numeric kernel shared by the arithmetic evaluator and the sandbox.
//!
//! Semantics follow the course's teaching language: integers are exact and
//! unbounded (up to [`MAX_INT_BITS`]), `/` always produces a real, `//` and
//! `%` floor toward negative infinity and `%` takes the sign of the divisor.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

/// Largest |exponent| accepted for an exact integer power.
pub const MAX_EXACT_EXPONENT: u32 = 4096;

/// Largest bit length an exact integer result may have.
pub const MAX_INT_BITS: u64 = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum NumericError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("numeric result out of range")]
    Overflow,
    #[error("result is not a real number")]
    NotReal,
}

/// An exact integer or a finite 64-bit real.
#[derive(Debug, Clone, PartialEq)]
pub enum Number {
    Int(BigInt),
    Real(f64),
}

impl Number {
    pub fn int(v: i64) -> Self {
        Number::Int(BigInt::from(v))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Int(_))
    }

    pub fn to_f64(&self) -> Result<f64, NumericError> {
        match self {
            Number::Int(i) => int_to_f64(i),
            Number::Real(r) => Ok(*r),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Int(i) => i.is_zero(),
            Number::Real(r) => *r == 0.0,
        }
    }

    pub fn neg(&self) -> Number {
        match self {
            Number::Int(i) => Number::Int(-i),
            Number::Real(r) => Number::Real(-r),
        }
    }

    pub fn add(&self, rhs: &Number) -> Result<Number, NumericError> {
        match (self, rhs) {
            (Number::Int(a), Number::Int(b)) => checked_int(a + b),
            _ => real(self.to_f64()? + rhs.to_f64()?),
        }
    }

    pub fn sub(&self, rhs: &Number) -> Result<Number, NumericError> {
        match (self, rhs) {
            (Number::Int(a), Number::Int(b)) => checked_int(a - b),
            _ => real(self.to_f64()? - rhs.to_f64()?),
        }
    }

    pub fn mul(&self, rhs: &Number) -> Result<Number, NumericError> {
        match (self, rhs) {
            (Number::Int(a), Number::Int(b)) => {
                if a.bits() + b.bits() > MAX_INT_BITS + 1 {
                    return Err(NumericError::Overflow);
                }
                checked_int(a * b)
            }
            _ => real(self.to_f64()? * rhs.to_f64()?),
        }
    }

    /// True division; always real.
    pub fn true_div(&self, rhs: &Number) -> Result<Number, NumericError> {
        if rhs.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        match (self, rhs) {
            (Number::Int(a), Number::Int(b)) => real(int_true_div(a, b)?),
            _ => real(self.to_f64()? / rhs.to_f64()?),
        }
    }

    pub fn floor_div(&self, rhs: &Number) -> Result<Number, NumericError> {
        if rhs.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        match (self, rhs) {
            (Number::Int(a), Number::Int(b)) => checked_int(a.div_floor(b)),
            _ => real(float_divmod(self.to_f64()?, rhs.to_f64()?).0),
        }
    }

    pub fn modulo(&self, rhs: &Number) -> Result<Number, NumericError> {
        if rhs.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        match (self, rhs) {
            (Number::Int(a), Number::Int(b)) => checked_int(a.mod_floor(b)),
            _ => real(float_divmod(self.to_f64()?, rhs.to_f64()?).1),
        }
    }

    pub fn pow(&self, rhs: &Number) -> Result<Number, NumericError> {
        match (self, rhs) {
            (Number::Int(base), Number::Int(exp)) => int_pow(base, exp),
            _ => float_pow(self.to_f64()?, rhs.to_f64()?),
        }
    }

    /// Numeric comparison; `None` only when a NaN is involved.
    pub fn compare(&self, rhs: &Number) -> Option<Ordering> {
        match (self, rhs) {
            (Number::Int(a), Number::Int(b)) => Some(a.cmp(b)),
            (Number::Int(a), Number::Real(b)) => cmp_int_real(a, *b),
            (Number::Real(a), Number::Int(b)) => cmp_int_real(b, *a).map(Ordering::reverse),
            (Number::Real(a), Number::Real(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Int(i) => write!(f, "{i}"),
            Number::Real(r) => f.write_str(&format_real(*r)),
        }
    }
}

fn checked_int(v: BigInt) -> Result<Number, NumericError> {
    if v.bits() > MAX_INT_BITS {
        Err(NumericError::Overflow)
    } else {
        Ok(Number::Int(v))
    }
}

fn real(v: f64) -> Result<Number, NumericError> {
    if v.is_finite() {
        Ok(Number::Real(v))
    } else {
        Err(NumericError::Overflow)
    }
}

pub fn int_to_f64(i: &BigInt) -> Result<f64, NumericError> {
    match i.to_f64() {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(NumericError::Overflow),
    }
}

fn int_true_div(a: &BigInt, b: &BigInt) -> Result<f64, NumericError> {
    const EXACT: u64 = 53;
    if a.bits() <= EXACT && b.bits() <= EXACT {
        // Both operands are exactly representable, so IEEE division rounds once.
        return Ok(a.to_f64().unwrap_or(0.0) / b.to_f64().unwrap_or(1.0));
    }
    // Scale so the quotient carries enough bits before the final rounding.
    let shift = (b.bits() as i64 - a.bits() as i64 + 64).max(0) as u32;
    let scaled = (a << shift) / b;
    let q = scaled.to_f64().ok_or(NumericError::Overflow)?;
    let v = q / 2f64.powi(shift as i32);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NumericError::Overflow)
    }
}

/// Floor division and modulo for reals, mirroring the reference runtime.
pub fn float_divmod(x: f64, y: f64) -> (f64, f64) {
    let mut m = x % y;
    let mut div = (x - m) / y;
    if m != 0.0 {
        if (y < 0.0) != (m < 0.0) {
            m += y;
            div -= 1.0;
        }
    } else {
        m = 0.0f64.copysign(y);
    }
    let floordiv = if div != 0.0 {
        let mut fd = div.floor();
        if div - fd > 0.5 {
            fd += 1.0;
        }
        fd
    } else {
        0.0f64.copysign(x / y)
    };
    (floordiv, m)
}

fn int_pow(base: &BigInt, exp: &BigInt) -> Result<Number, NumericError> {
    if exp.is_negative() {
        if base.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        if exp.abs() > BigInt::from(MAX_EXACT_EXPONENT) {
            return Err(NumericError::Overflow);
        }
        return float_pow(int_to_f64(base)?, int_to_f64(exp)?);
    }
    let e = match exp.to_u32() {
        Some(e) if e <= MAX_EXACT_EXPONENT => e,
        _ => return Err(NumericError::Overflow),
    };
    if base.magnitude().bits() > 1 && (base.bits() - 1) * u64::from(e) >= MAX_INT_BITS {
        return Err(NumericError::Overflow);
    }
    checked_int(num_traits::pow(base.clone(), e as usize))
}

fn float_pow(x: f64, y: f64) -> Result<Number, NumericError> {
    if x == 0.0 && y < 0.0 {
        return Err(NumericError::DivisionByZero);
    }
    if x < 0.0 && y.fract() != 0.0 {
        return Err(NumericError::NotReal);
    }
    real(x.powf(y))
}

fn cmp_int_real(a: &BigInt, b: f64) -> Option<Ordering> {
    if b.is_nan() {
        return None;
    }
    if b.is_infinite() {
        return Some(if b > 0.0 { Ordering::Less } else { Ordering::Greater });
    }
    if a.bits() <= 53 {
        return a.to_f64().and_then(|af| af.partial_cmp(&b));
    }
    // Compare against the integral part of b, then its fraction.
    let whole = b.trunc();
    let bi = float_to_bigint(whole);
    match a.cmp(&bi) {
        Ordering::Equal => 0.0f64.partial_cmp(&(b - whole)),
        o => Some(o),
    }
}

/// Exact integer value of an integral finite float.
pub fn float_to_bigint(v: f64) -> BigInt {
    let bits = v.to_bits();
    let sign = if (bits >> 63) != 0 { -1 } else { 1 };
    let exponent = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = if exponent == 0 {
        (bits & 0xf_ffff_ffff_ffff) << 1
    } else {
        (bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000
    };
    let shift = exponent - 1075;
    let m = BigInt::from(mantissa);
    let mag = if shift >= 0 {
        m << (shift as usize)
    } else {
        m >> ((-shift) as usize)
    };
    mag * sign
}

/// Renders a real the way the reference runtime's `repr` does: shortest
/// round-tripping digits, positional between 1e-4 and 1e16, scientific with a
/// signed two-digit exponent outside that range, and a trailing `.0` on
/// integral values.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{:e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent digits");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let decpt = exp + 1;
    let n = digits.len() as i32;
    let mut out = String::new();
    if v < 0.0 {
        out.push('-');
    }
    if decpt > -4 && decpt <= 16 {
        if decpt <= 0 {
            out.push_str("0.");
            out.extend(std::iter::repeat_n('0', (-decpt) as usize));
            out.push_str(&digits);
        } else if decpt >= n {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', (decpt - n) as usize));
            out.push_str(".0");
        } else {
            out.push_str(&digits[..decpt as usize]);
            out.push('.');
            out.push_str(&digits[decpt as usize..]);
        }
    } else {
        out.push_str(&digits[..1]);
        if n > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        let e = decpt - 1;
        out.push('e');
        out.push(if e < 0 { '-' } else { '+' });
        out.push_str(&format!("{:02}", e.abs()));
    }
    out
}
