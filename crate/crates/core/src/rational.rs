//! Exact rational helpers shared by every probability-valued computation.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid rational `{0}` (expected an integer or num/den with den > 0)")]
pub struct ParseRationalError(pub String);

/// Parses `"num/den"` or a plain integer.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let (num, den) = match text.trim().split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| err())?;
    let den = BigInt::from_str(den).map_err(|_| err())?;
    if !den.is_positive() {
        return Err(err());
    }
    Ok(Rational::new(num, den))
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

pub fn int(value: u64) -> Rational {
    Rational::from_integer(value.into())
}

/// `2^-n`.
pub fn inv_pow2(n: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << n)
}

/// `2^e` for any integer exponent.
pub fn pow2(e: i64) -> Rational {
    if e >= 0 {
        Rational::from_integer(BigInt::one() << e as u64)
    } else {
        inv_pow2(e.unsigned_abs() as u32)
    }
}

/// `num/den` in lowest terms; integers keep their `/1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Natural logarithm of a positive big integer, accurate to f64 precision
/// even far outside the f64 range.
fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln r` for `r > 0`.
pub fn ln(r: &Rational) -> f64 {
    assert!(r.is_positive(), "logarithm of a non-positive rational");
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

/// `log2 r` for `r > 0`.
pub fn log2(r: &Rational) -> f64 {
    ln(r) / std::f64::consts::LN_2
}

/// Approximate value; tiny magnitudes are computed through logarithms.
pub fn to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    match r.to_f64() {
        Some(v) if v != 0.0 && v.is_finite() => v,
        _ => {
            let sign = if r.is_negative() { -1.0 } else { 1.0 };
            sign * ln(&r.abs()).exp()
        }
    }
}

/// Decimal rendering of an exact value, for human-facing output only.
pub fn format_decimal(r: &Rational) -> String {
    format!("{:.9e}", to_f64(r))
}

/// Serde adapter writing a rational as `{"num": "...", "den": "..."}`.
///
/// Components are strings because they routinely exceed 64 bits.
pub mod fraction {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Rational", 2)?;
        st.serialize_field("num", &r.numer().to_string())?;
        st.serialize_field("den", &r.denom().to_string())?;
        st.end()
    }

    #[derive(Deserialize)]
    struct Parts {
        num: String,
        den: String,
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let parts = Parts::deserialize(d)?;
        parse_rational(&format!("{}/{}", parts.num, parts.den)).map_err(serde::de::Error::custom)
    }
}

/// Wrapper that serializes through [`fraction`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fraction(#[serde(with = "fraction")] pub Rational);

/// An enclosure `[low, high]`; `high = None` means unbounded above.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "fraction")]
    pub low: Rational,
    #[serde(with = "optional_fraction")]
    pub high: Option<Rational>,
}

impl Interval {
    pub fn new(low: Rational, high: Rational) -> Self {
        Self { low, high: Some(high) }
    }

    pub fn point(value: Rational) -> Self {
        Self { low: value.clone(), high: Some(value) }
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.low <= other.low
            && match (&self.high, &other.high) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some(a), Some(b)) => b <= a,
            }
    }

    pub fn contains(&self, value: &Rational) -> bool {
        &self.low <= value && self.high.as_ref().is_none_or(|h| value <= h)
    }

    /// Both endpoints multiplied by `factor > 0`.
    pub fn scaled(&self, factor: &Rational) -> Interval {
        Interval { low: &self.low * factor, high: self.high.as_ref().map(|h| h * factor) }
    }
}

mod optional_fraction {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => fraction::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<Fraction>::deserialize(d).map(|o| o.map(|f| f.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("2/4").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational(" -1/3 ").unwrap(), rat(-1, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1/-2").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn powers_of_two() {
        assert_eq!(pow2(3), int(8));
        assert_eq!(pow2(-3), rat(1, 8));
        assert_eq!(inv_pow2(0), int(1));
    }

    #[test]
    fn logs_of_tiny_values() {
        let r = inv_pow2(3000);
        assert!((log2(&r) + 3000.0).abs() < 1e-9);
        assert!((ln(&rat(1, 8)) + 8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_string(&Fraction(rat(7, 256))).unwrap();
        assert_eq!(v, r#"{"num":"7","den":"256"}"#);
        let back: Fraction = serde_json::from_str(&v).unwrap();
        assert_eq!(back.0, rat(7, 256));
    }

    #[test]
    fn interval_containment() {
        let outer = Interval::new(rat(1, 4), rat(3, 4));
        assert!(outer.contains_interval(&Interval::new(rat(1, 3), rat(1, 2))));
        assert!(!outer.contains_interval(&Interval { low: rat(1, 3), high: None }));
        assert!(outer.contains(&rat(3, 4)));
    }
}
