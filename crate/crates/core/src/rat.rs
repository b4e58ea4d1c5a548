//! Exact rationals and the extended rationals `Q ∪ {+∞}`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Formats as `p/q` (integers as `p/1`).
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or `p`. Rejects zero denominators and non-reduced fractions.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let bad = || Error::InvalidInput(format!("malformed rational {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        None => BigInt::from_str(s).map(Rat::from_integer).map_err(|_| bad()),
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
            }
            if !q.is_positive() {
                return Err(Error::InvalidInput(format!("negative denominator in {s:?}")));
            }
            let r = Rat::new(p.clone(), q.clone());
            if r.numer() != &p || r.denom() != &q {
                return Err(Error::InvalidInput(format!("{s:?} is not in lowest terms")));
            }
            Ok(r)
        }
    }
}

/// Serde adapter for a single `Rat` as a `"p/q"` string.
pub mod serde_rat {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rat>`.
pub mod serde_rat_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(format_rat).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| parse_rat(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// A rational or `+∞`. `+∞` compares above every rational.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtRat {
    Finite(Rat),
    Infinity,
}

impl ExtRat {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRat::Infinity)
    }

    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            ExtRat::Infinity => None,
        }
    }

    pub fn min_with(self, other: ExtRat) -> ExtRat {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl From<Rat> for ExtRat {
    fn from(r: Rat) -> Self {
        ExtRat::Finite(r)
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
            (ExtRat::Finite(_), ExtRat::Infinity) => Ordering::Less,
            (ExtRat::Infinity, ExtRat::Finite(_)) => Ordering::Greater,
            (ExtRat::Infinity, ExtRat::Infinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Finite(r) => write!(f, "{r}"),
            ExtRat::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for ExtRat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "inf" | "+inf" => Ok(ExtRat::Infinity),
            other => parse_rat(other).map(ExtRat::Finite),
        }
    }
}

impl Serialize for ExtRat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtRat::Finite(r) => s.serialize_str(&format_rat(r)),
            ExtRat::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtRat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Non-negative integer or `+∞`, used for crepant counts and class ranks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtCount {
    Finite(u64),
    Infinity,
}

impl fmt::Display for ExtCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtCount::Finite(n) => write!(f, "{n}"),
            ExtCount::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtCount::Finite(n) => s.serialize_u64(*n),
            ExtCount::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(ExtCount::Finite(n)),
            Raw::S(s) if s == "inf" => Ok(ExtCount::Infinity),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad count {s:?}"))),
        }
    }
}

pub(crate) fn rat_from_i128(n: i128) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub(crate) fn is_integral(r: &Rat) -> bool {
    r.denom().is_one()
}

pub(crate) fn to_i64(r: &Rat) -> Option<i64> {
    use num_traits::ToPrimitive;
    if is_integral(r) {
        r.numer().to_i64()
    } else {
        None
    }
}
