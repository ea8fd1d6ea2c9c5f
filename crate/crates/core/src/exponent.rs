use std::fmt;

use num_rational::Ratio;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// An exponent `p ∈ [1, ∞]`, kept exact: either a rational number or the
/// `∞` sentinel. `∞` is never approximated by a large finite value; max
/// semantics are applied exactly wherever the exponent is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Ratio<u64>),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(Ratio::new_raw(1, 1));
    pub const TWO: Exponent = Exponent::Finite(Ratio::new_raw(2, 1));

    /// Exact rational exponent `num/den`. Rejects values below 1.
    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::BadExponent("finite denominator"));
        }
        if num < den {
            return Err(Error::BadExponent("p >= 1"));
        }
        Ok(Exponent::Finite(Ratio::new(num, den)))
    }

    pub fn integer(p: u64) -> Result<Self> {
        Self::rational(p, 1)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Exponent::Finite(r) if *r == Ratio::new_raw(1, 1))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// `f64` value; `+∞` for the sentinel.
    pub fn as_f64(&self) -> f64 {
        match self {
            Exponent::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// Hölder conjugate `q = p/(p-1)`, with `1 ↔ ∞` exact.
    pub fn conjugate(&self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::ONE,
            Exponent::Finite(r) => {
                if self.is_one() {
                    Exponent::Infinity
                } else {
                    Exponent::Finite(r / (r - Ratio::new_raw(1, 1)))
                }
            }
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use Exponent::*;
        match (self, other) {
            (Infinity, Infinity) => std::cmp::Ordering::Equal,
            (Infinity, Finite(_)) => std::cmp::Ordering::Greater,
            (Finite(_), Infinity) => std::cmp::Ordering::Less,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinity => write!(f, "inf"),
            Exponent::Finite(r) => {
                if *r.denom() == 1 {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") || s == "∞" {
            return Ok(Exponent::Infinity);
        }
        if let Some((num, den)) = s.split_once('/') {
            let num: u64 = num
                .trim()
                .parse()
                .map_err(|_| Error::BadExponent("rational numerator"))?;
            let den: u64 = den
                .trim()
                .parse()
                .map_err(|_| Error::BadExponent("rational denominator"))?;
            return Exponent::rational(num, den);
        }
        let p: u64 = s.parse().map_err(|_| Error::BadExponent("integer or num/den or inf"))?;
        Exponent::integer(p)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(n) => Exponent::integer(n).map_err(D::Error::custom),
            Raw::Str(s) => s.parse().map_err(D::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugates() {
        assert_eq!(Exponent::ONE.conjugate(), Exponent::Infinity);
        assert_eq!(Exponent::Infinity.conjugate(), Exponent::ONE);
        assert_eq!(Exponent::TWO.conjugate(), Exponent::TWO);
        let p = Exponent::rational(3, 2).unwrap();
        assert_eq!(p.conjugate(), Exponent::integer(3).unwrap());
        let p5 = Exponent::integer(5).unwrap();
        assert_eq!(p5.conjugate(), Exponent::rational(5, 4).unwrap());
    }

    #[test]
    fn rejects_below_one() {
        assert!(Exponent::rational(1, 2).is_err());
        assert!(Exponent::rational(1, 0).is_err());
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["1", "2", "3/2", "5", "inf"] {
            let p: Exponent = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let p: Exponent = serde_json::from_str("\"3/2\"").unwrap();
        assert_eq!(p, Exponent::rational(3, 2).unwrap());
        let p: Exponent = serde_json::from_str("2").unwrap();
        assert_eq!(p, Exponent::TWO);
        let p: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert!(p.is_infinite());
    }
}
