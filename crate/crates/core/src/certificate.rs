//! Recorded instances of the inequalities checked during a run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Relative tolerance applied to non-strict comparisons unless a caller
/// supplies its own. Absorbs summation-order rounding only.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// One evaluated inequality `lhs <= rhs` (or `lhs < rhs` when `strict`).
///
/// `slack` is the relative room left: `(rhs - lhs) / |rhs|`, so a tight
/// inequality has slack 0 and a violated one has negative slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    #[serde(with = "lenient")]
    pub lhs: f64,
    #[serde(with = "lenient")]
    pub rhs: f64,
    pub pass: bool,
    #[serde(with = "lenient")]
    pub slack: f64,
    #[serde(default)]
    pub strict: bool,
    /// Multiplicative tolerance: passes when `lhs <= rhs * (1 + tol)`.
    #[serde(default, with = "lenient")]
    pub tol: f64,
    #[serde(default, with = "lenient_map")]
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Floats that may be infinite or NaN: finite values stay numbers, the rest
/// become the strings `"inf"`, `"-inf"` and `"nan"`, which JSON can carry.
pub mod lenient {
    use serde::{de, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn to_repr(x: f64) -> Result<f64, &'static str> {
        if x.is_finite() {
            Ok(x)
        } else if x.is_nan() {
            Err("nan")
        } else if x > 0.0 {
            Err("inf")
        } else {
            Err("-inf")
        }
    }

    pub fn from_text(s: &str) -> Option<f64> {
        match s {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        match to_repr(*x) {
            Ok(v) => s.serialize_f64(v),
            Err(t) => s.serialize_str(t),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => from_text(&t).ok_or_else(|| de::Error::custom(format!("not a number: {t}"))),
        }
    }
}

mod lenient_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::lenient")] f64);

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, &v)| (k, Wrap(v))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let raw = BTreeMap::<String, Wrap>::deserialize(d)?;
        Ok(raw.into_iter().map(|(k, v)| (k, v.0)).collect())
    }
}

fn relative_slack(lhs: f64, rhs: f64) -> f64 {
    let scale = rhs.abs().max(f64::MIN_POSITIVE);
    (rhs - lhs) / scale
}

impl Certificate {
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::le_tol(name, lhs, rhs, DEFAULT_REL_TOL)
    }

    pub fn le_tol(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let bound = if rhs >= 0.0 { rhs * (1.0 + tol) } else { rhs * (1.0 - tol) };
        let pass = lhs.is_finite() && rhs.is_finite() && lhs <= bound
            || (lhs == f64::NEG_INFINITY && !rhs.is_nan());
        Certificate {
            name: name.into(),
            lhs,
            rhs,
            pass,
            slack: relative_slack(lhs, rhs),
            strict: false,
            tol,
            constants: BTreeMap::new(),
            note: None,
        }
    }

    pub fn lt(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Certificate {
            name: name.into(),
            lhs,
            rhs,
            pass: lhs.is_finite() && rhs.is_finite() && lhs < rhs,
            slack: relative_slack(lhs, rhs),
            strict: true,
            tol: 0.0,
            constants: BTreeMap::new(),
            note: None,
        }
    }

    /// `|lhs - rhs| <= tol * max(1, |rhs|)`, recorded as two-sided equality.
    pub fn eq_tol(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let pass = (lhs - rhs).abs() <= tol * rhs.abs().max(1.0);
        Certificate {
            name: name.into(),
            lhs,
            rhs,
            pass,
            slack: relative_slack(lhs, rhs),
            strict: false,
            tol,
            constants: BTreeMap::new(),
            note: None,
        }
    }

    /// A boolean fact recorded as `0 <= 0` (holds) or `1 <= 0` (fails).
    pub fn flag(name: impl Into<String>, holds: bool) -> Self {
        let lhs = if holds { 0.0 } else { 1.0 };
        let mut cert = Self::le_tol(name, lhs, 0.0, 0.0);
        cert.pass = holds;
        cert
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn noted(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

pub fn all_pass(certs: &[Certificate]) -> bool {
    certs.iter().all(|c| c.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_passes_non_strict_only() {
        assert!(Certificate::le("eq", 2.0, 2.0).pass);
        assert!(!Certificate::lt("eq", 2.0, 2.0).pass);
        assert_eq!(Certificate::le("eq", 2.0, 2.0).slack, 0.0);
    }

    #[test]
    fn tolerance_is_multiplicative() {
        assert!(Certificate::le_tol("t", 1.05, 1.0, 0.1).pass);
        assert!(!Certificate::le_tol("t", 1.15, 1.0, 0.1).pass);
        assert!(Certificate::le("t", 1.0 + 1e-14, 1.0).pass);
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Certificate::le("n", f64::NAN, 1.0).pass);
        assert!(!Certificate::lt("n", 0.0, f64::NAN).pass);
    }
}
