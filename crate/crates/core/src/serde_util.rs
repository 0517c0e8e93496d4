//! Serde helpers for budgets that may be infinite. JSON has no infinity, so
//! unbounded values are written as the string "inf".

use serde::{de, Deserialize, Deserializer, Serializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

fn parse_inf(s: &str) -> bool {
    matches!(s.trim().to_ascii_lowercase().as_str(), "inf" | "infinity" | "+inf")
}

pub mod f64_or_inf {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) => Ok(v),
            NumOrStr::Str(s) if parse_inf(&s) => Ok(f64::INFINITY),
            NumOrStr::Str(s) => Err(de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}

/// `None` is the unbounded count.
pub mod count_or_inf {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(n) => s.serialize_u64(*n),
            None => s.serialize_str("inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) if v.is_infinite() && v > 0.0 => Ok(None),
            NumOrStr::Num(v) if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(Some(v as u64)),
            NumOrStr::Num(v) => Err(de::Error::custom(format!("expected a non-negative count, got {v}"))),
            NumOrStr::Str(s) if parse_inf(&s) => Ok(None),
            NumOrStr::Str(s) => Err(de::Error::custom(format!("expected count or \"inf\", got {s:?}"))),
        }
    }
}
