//! Serde helpers for extended reals: finite values are plain JSON numbers,
//! ±∞ are the strings `"inf"` and `"-inf"`.

use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;

pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
    if value.is_finite() {
        s.serialize_f64(*value)
    } else if value.is_nan() {
        s.serialize_str("nan")
    } else if *value > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

struct ExtRealVisitor;

impl Visitor<'_> for ExtRealVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        parse(v).ok_or_else(|| E::invalid_value(de::Unexpected::Str(v), &self))
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    d.deserialize_any(ExtRealVisitor)
}

/// Parses a number or an infinity spelled `inf`, `+inf`, `-inf`, `infinity`.
pub fn parse(text: &str) -> Option<f64> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        other => other.parse().ok(),
    }
}

/// Formats an extended real for CSV cells.
pub fn format(value: f64) -> String {
    if value.is_finite() {
        format!("{value}")
    } else if value.is_nan() {
        "nan".into()
    } else if value > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub mod vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&Wrap(*v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Wrap> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|w| w.0).collect())
    }

    #[derive(serde::Serialize, serde::Deserialize)]
    #[serde(transparent)]
    struct Wrap(#[serde(with = "super")] f64);
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Holder {
        #[serde(with = "crate::ext_real")]
        level: f64,
    }

    #[test]
    fn round_trip() {
        for v in [1.25, f64::INFINITY, f64::NEG_INFINITY, 0.0] {
            let json = serde_json::to_string(&Holder { level: v }).unwrap();
            let back: Holder = serde_json::from_str(&json).unwrap();
            assert_eq!(back.level, v);
        }
        assert_eq!(
            serde_json::to_string(&Holder {
                level: f64::INFINITY
            })
            .unwrap(),
            r#"{"level":"inf"}"#
        );
        let h: Holder = serde_json::from_str(r#"{"level":3}"#).unwrap();
        assert_eq!(h.level, 3.0);
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(super::parse(" Inf "), Some(f64::INFINITY));
        assert_eq!(super::parse("-2.5"), Some(-2.5));
        assert_eq!(super::parse("abc"), None);
        assert_eq!(super::format(f64::INFINITY), "inf");
        assert_eq!(super::format(0.5), "0.5");
    }
}
