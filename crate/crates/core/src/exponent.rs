use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An integrability or summability exponent in `(0, ∞]`.
///
/// Serialized as a JSON number, or as the string `"inf"` for `∞`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value <= 0.0 {
            return Err(Error::InvalidIndex(format!(
                "exponent must lie in (0, inf], got {value}"
            )));
        }
        Ok(Exponent(value))
    }

    pub fn finite(value: f64) -> Result<Self> {
        let e = Self::new(value)?;
        if e.is_infinite() {
            return Err(Error::InvalidIndex("exponent must be finite".into()));
        }
        Ok(e)
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p`, which is `0` for `p = ∞`.
    #[inline]
    pub fn recip(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    /// Exponent from its reciprocal; `0` maps to `∞`.
    pub fn from_recip(recip: f64) -> Result<Self> {
        if recip == 0.0 {
            Ok(Self::INFINITY)
        } else {
            Self::new(1.0 / recip)
        }
    }

    /// Hölder conjugate `p'` with `1/p + 1/p' = 1`, for `p ≥ 1`.
    pub fn conjugate(self) -> Result<Self> {
        if self.0 < 1.0 {
            return Err(Error::InvalidIndex(format!(
                "conjugate exponent needs p >= 1, got {}",
                self.0
            )));
        }
        Self::from_recip(1.0 - self.recip())
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(Self::INFINITY),
            other => {
                let v: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidIndex(format!("cannot parse exponent {other:?}")))?;
                Self::new(v)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ExponentVisitor;

        impl Visitor<'_> for ExponentVisitor {
            type Value = Exponent;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Exponent::new(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExponentVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_handles_infinity() {
        let v: Vec<Exponent> = serde_json::from_str(r#"[2, 1.5, "inf"]"#).unwrap();
        assert_eq!(v[0].get(), 2.0);
        assert!(v[2].is_infinite());
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[2.0,1.5,"inf"]"#);
    }

    #[test]
    fn conjugates() {
        assert!(Exponent::new(1.0).unwrap().conjugate().unwrap().is_infinite());
        assert_eq!(Exponent::new(2.0).unwrap().conjugate().unwrap().get(), 2.0);
        assert_eq!(Exponent::INFINITY.conjugate().unwrap().get(), 1.0);
        assert!(Exponent::new(0.5).unwrap().conjugate().is_err());
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(Exponent::new(0.0).is_err());
        assert!(Exponent::new(-1.0).is_err());
        assert!("abc".parse::<Exponent>().is_err());
    }
}
