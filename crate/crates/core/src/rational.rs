//! Exact rational numbers and the helpers shared by every module: parsing from
//! `p/q` or decimal strings, canonical formatting, decimal rendering, and an
//! extended type for quantities that may be −∞.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"3/8"`, `"-2"`, `"0.55"` or `"1e-3"` into an exact rational.
pub fn parse(input: &str) -> Result<Rational> {
    let s = input.trim();
    let bad = |reason: &str| Error::ParseRational {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    if s.is_empty() {
        return Err(bad("empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad("bad numerator"))?;
        let den: BigInt = den.trim().parse().map_err(|_| bad("bad denominator"))?;
        if den.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| bad("bad exponent"))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad("no digits"));
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad("not a number"));
    }
    let all: String = format!("{whole}{frac}");
    let num: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad("not a number"))? };
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Canonical string: `"p/q"` in lowest terms, or `"p"` for integers.
pub fn format(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with `digits` significant digits (display only, truncated
/// toward zero).
pub fn to_decimal(r: &Rational, digits: usize) -> String {
    if r.is_zero() {
        return "0".to_string();
    }
    let negative = r.is_negative();
    let num = r.numer().abs().to_biguint().unwrap();
    let den = r.denom().to_biguint().unwrap();

    // Find the decimal exponent e with 10^e <= |r| < 10^(e+1).
    let ten = BigUint::from(10u32);
    let mut exp: i64 = num.to_string().len() as i64 - den.to_string().len() as i64;
    let ge = |e: i64| -> bool {
        if e >= 0 {
            num >= &den * num_traits::pow(ten.clone(), e as usize)
        } else {
            &num * num_traits::pow(ten.clone(), (-e) as usize) >= den
        }
    };
    while !ge(exp) {
        exp -= 1;
    }
    while ge(exp + 1) {
        exp += 1;
    }

    // Scaled integer holding the leading `digits` digits.
    let shift = digits as i64 - 1 - exp;
    let scaled = if shift >= 0 {
        (&num * num_traits::pow(ten.clone(), shift as usize)) / &den
    } else {
        num / (&den * num_traits::pow(ten.clone(), (-shift) as usize))
    };
    let mut text = scaled.to_string();
    let point = exp + 1;
    let mut out = String::new();
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(&text);
    } else if point as usize >= text.len() {
        text.extend(std::iter::repeat_n('0', point as usize - text.len()));
        out.push_str(&text);
    } else {
        out.push_str(&text[..point as usize]);
        out.push('.');
        out.push_str(&text[point as usize..]);
    }
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    if negative {
        out.insert(0, '-');
    }
    out
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `floor(r * 2^bits)` as a signed integer.
pub(crate) fn to_fixed(r: &Rational, bits: usize) -> BigInt {
    (r.numer() << bits).div_floor(r.denom())
}

/// `floor(sqrt(r) * 2^bits)` for `r >= 0`.
pub(crate) fn sqrt_fixed(r: &Rational, bits: usize) -> BigInt {
    debug_assert!(!r.is_negative());
    let scaled = (r.numer() << (2 * bits)).div_floor(r.denom());
    match scaled.sign() {
        Sign::Minus => BigInt::zero(),
        _ => scaled.sqrt(),
    }
}

/// A rational extended with −∞, used for profits and potentials under the
/// "positive cost over zero share" convention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extended {
    NegInfinity,
    Finite(Rational),
}

impl Extended {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Extended::Finite(r) => Some(r),
            Extended::NegInfinity => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }
}

impl From<Rational> for Extended {
    fn from(r: Rational) -> Self {
        Extended::Finite(r)
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Extended {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Extended::NegInfinity, Extended::NegInfinity) => Ordering::Equal,
            (Extended::NegInfinity, _) => Ordering::Less,
            (_, Extended::NegInfinity) => Ordering::Greater,
            (Extended::Finite(a), Extended::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInfinity => write!(f, "-inf"),
            Extended::Finite(r) => write!(f, "{}", format(r)),
        }
    }
}
