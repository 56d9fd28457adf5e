//! Exact rational helpers and symbolic logarithms.

use num_bigint::{BigInt, Sign};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt;

use crate::error::{Error, Result};

/// Small exact rational for local geometry (densities, weights).
pub type Q = Ratio<i64>;

pub fn q(n: i64, d: i64) -> Q {
    Ratio::new(n, d)
}

pub fn big(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn bigi(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_big(x: &Q) -> BigRational {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

pub fn parse_big(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((m, e)) = s.split_once(['e', 'E']) {
        let e: i32 = e.parse().map_err(|_| bad())?;
        let scale = BigRational::from_integer(num_traits::pow(BigInt::from(10), e.unsigned_abs() as usize));
        let m = parse_big(m)?;
        return Ok(if e >= 0 { m * scale } else { m / scale });
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(n, d))
    } else if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches('-'), fp);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let r = BigRational::new(n, d);
        Ok(if neg { -r } else { r })
    } else {
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(BigRational::from_integer(n))
    }
}

pub fn parse_q(s: &str) -> Result<Q> {
    let b = parse_big(s)?;
    let n = b.numer().to_i64().ok_or_else(|| Error::Parse(s.into()))?;
    let d = b.denom().to_i64().ok_or_else(|| Error::Parse(s.into()))?;
    Ok(Ratio::new(n, d))
}

pub fn fmt_big(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn fmt_q(x: &Q) -> String {
    if *x.denom() == 1 {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Natural log of a positive big integer, accurate to f64 precision.
pub fn ln_bigint(n: &BigInt) -> f64 {
    assert!(n.sign() == Sign::Plus, "log of non-positive integer");
    let bits = n.bits();
    if bits < 1000 {
        n.to_f64().unwrap().ln()
    } else {
        let shift = bits - 900;
        let top: BigInt = n >> shift;
        top.to_f64().unwrap().ln() + (shift as f64) * std::f64::consts::LN_2
    }
}

pub fn ln_big(x: &BigRational) -> f64 {
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

pub fn big_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let s = if x.is_negative() { -1.0 } else { 1.0 };
    s * ln_big(&x.abs()).exp()
}

/// `a + log(b)` with rational `a` and positive rational `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogAffine {
    pub a: BigRational,
    pub b: BigRational,
}

impl LogAffine {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        assert!(b.is_positive());
        LogAffine { a, b }
    }
    pub fn to_f64(&self) -> f64 {
        big_to_f64(&self.a) + ln_big(&self.b)
    }
    pub fn add_rational(&self, r: &BigRational) -> LogAffine {
        LogAffine { a: &self.a + r, b: self.b.clone() }
    }
    pub fn to_json(&self) -> Value {
        json!({ "affine": [rational_json_number(&self.a), fmt_big(&self.b)] })
    }
}

impl fmt::Display for LogAffine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+log({})", fmt_big(&self.a), fmt_big(&self.b))
    }
}

/// `p * (q + log(b))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogScaled {
    pub p: BigRational,
    pub inner: LogAffine,
}

impl LogScaled {
    pub fn to_f64(&self) -> f64 {
        big_to_f64(&self.p) * self.inner.to_f64()
    }
    pub fn to_json(&self) -> Value {
        json!({ "scale": fmt_big(&self.p), "affine": [rational_json_number(&self.inner.a), fmt_big(&self.inner.b)] })
    }
}

impl fmt::Display for LogScaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})({})", fmt_big(&self.p), self.inner)
    }
}

fn rational_json_number(x: &BigRational) -> Value {
    if x.denom().is_one() {
        if let Some(i) = x.numer().to_i64() {
            return json!(i);
        }
    }
    json!(fmt_big(x))
}

/// Serde adapter writing rationals as "p/q" strings.
pub mod serde_big {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_big(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let v = Value::deserialize(d)?;
        match v {
            Value::String(s) => parse_big(&s).map_err(serde::de::Error::custom),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(bigi(i))
                } else {
                    parse_big(&n.to_string()).map_err(serde::de::Error::custom)
                }
            }
            _ => Err(serde::de::Error::custom("expected rational string or number")),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RationalString(#[serde(with = "serde_big")] pub BigRational);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["479/3355", "5", "-7/2", "0"] {
            assert_eq!(fmt_big(&parse_big(s).unwrap()), s);
        }
        assert_eq!(parse_big("2.5").unwrap(), big(5, 2));
        assert!(parse_big("1/0").is_err());
    }

    #[test]
    fn log_of_huge_integer() {
        let n = num_traits::pow(BigInt::from(10), 400);
        let l = ln_bigint(&n);
        assert!((l - 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn affine_display() {
        let t = LogAffine::new(bigi(5), bigi(2433024));
        assert_eq!(t.to_string(), "5+log(2433024)");
        assert_eq!(t.to_json(), json!({"affine": [5, "2433024"]}));
    }
}
