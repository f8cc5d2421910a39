//! Exact rational scalars.
//!
//! Every metric quantity in the crate is a [`Rational`]. Values stay small on
//! desk-scale inputs; the workspace builds with overflow checks enabled so an
//! out-of-range intermediate panics instead of wrapping.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

/// Shorthand constructor, `q(3, 4)` is three quarters.
pub fn q(numer: i128, denom: i128) -> Rational {
    Rational::new(numer, denom)
}

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

/// Always renders `p/q`, integers included, so CSV columns have one shape.
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational: {text:?}"));
    match text.split_once('/') {
        Some((n, d)) => {
            let n: i128 = n.trim().parse().map_err(|_| bad())?;
            let d: i128 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => {
            if let Ok(n) = text.parse::<i128>() {
                return Ok(int(n));
            }
            parse_decimal(text).ok_or_else(bad)
        }
    }
}

// Finite decimal such as "0.125" or "-2.5".
fn parse_decimal(text: &str) -> Option<Rational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = body.split_once('.')?;
    if frac.len() > 30 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let whole: i128 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
    let frac_num: i128 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let denom = 10i128.checked_pow(frac.len() as u32)?;
    let r = int(whole) + Rational::new(frac_num, denom);
    Some(if neg { -r } else { r })
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn ceil_u64(r: &Rational) -> u64 {
    let c = r.ceil().to_integer();
    if c < 0 {
        0
    } else {
        c as u64
    }
}

pub fn floor_u64(r: &Rational) -> u64 {
    let f = r.floor().to_integer();
    if f < 0 {
        0
    } else {
        f as u64
    }
}

/// Least common multiple of the denominators, `None` on i128 overflow.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Option<i128> {
    let mut acc: i128 = 1;
    for v in values {
        let d = *v.denom();
        let g = acc.gcd(&d);
        acc = (acc / g).checked_mul(d)?;
    }
    Some(acc)
}

/// `r * scale` as an integer, `None` unless exact and in range.
pub fn scaled_integer(r: &Rational, scale: i128) -> Option<i128> {
    let d = *r.denom();
    if scale % d != 0 {
        return None;
    }
    r.numer().checked_mul(scale / d)
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

pub fn min(a: Rational, b: Rational) -> Rational {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max(a: Rational, b: Rational) -> Rational {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn is_zero(r: &Rational) -> bool {
    r.is_zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn zero() -> Rational {
    Rational::zero()
}

/// Serde adapter storing a rational as its `p/q` string.
pub mod serde_str {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = RationalText::deserialize(d)?;
        text.into_rational().map_err(serde::de::Error::custom)
    }

    /// Accepts `"3/4"`, `"0.75"`, `3` or `0.5` (floats only when dyadic-exact).
    #[derive(Deserialize)]
    #[serde(untagged)]
    pub enum RationalText {
        Int(i64),
        Float(f64),
        Text(String),
    }

    impl RationalText {
        pub fn into_rational(self) -> Result<Rational> {
            match self {
                RationalText::Int(n) => Ok(int(n as i128)),
                RationalText::Text(t) => parse(&t),
                RationalText::Float(f) => {
                    Rational::approximate_float(f)
                        .filter(|r| to_f64(r) == f)
                        .ok_or_else(|| Error::Parse(format!("float {f} is not an exact rational; quote it as \"p/q\"")))
                }
            }
        }
    }
}

/// Serde adapter for `Option<Rational>`.
pub mod serde_opt {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&format(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        let text = Option::<serde_str::RationalText>::deserialize(d)?;
        text.map(|t| t.into_rational().map_err(serde::de::Error::custom)).transpose()
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let items = Vec::<serde_str::RationalText>::deserialize(d)?;
        items
            .into_iter()
            .map(|t| t.into_rational().map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod serde_vec_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for row in v {
            seq.serialize_element(&row.iter().map(format).collect::<Vec<_>>())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
        let rows = Vec::<Vec<serde_str::RationalText>>::deserialize(d)?;
        rows.into_iter()
            .map(|row| row.into_iter().map(|t| t.into_rational().map_err(serde::de::Error::custom)).collect())
            .collect()
    }
}
