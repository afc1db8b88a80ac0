//! Lowercase hexadecimal encoding of big integers, as used by every JSON
//! document the lab reads or writes. No prefix, no leading zeros; zero is "0".

use num_bigint::BigUint;
use serde::{de, Deserialize, Deserializer, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid hex integer {0:?}: expected lowercase hex digits without leading zeros")]
pub struct HexError(pub String);

pub fn to_hex(value: &BigUint) -> String {
    value.to_str_radix(16)
}

pub fn from_hex(text: &str) -> Result<BigUint, HexError> {
    let canonical = !text.is_empty()
        && text.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
        && (text == "0" || !text.starts_with('0'));
    if !canonical {
        return Err(HexError(text.to_owned()));
    }
    BigUint::parse_bytes(text.as_bytes(), 16).ok_or_else(|| HexError(text.to_owned()))
}

/// `#[serde(with = "hexint::single")]`
pub mod single {
    use super::*;

    pub fn serialize<S: Serializer>(value: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_hex(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        from_hex(&text).map_err(de::Error::custom)
    }
}

/// `#[serde(with = "hexint::vec")]`
pub mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(values: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&to_hex(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts.iter().map(|t| from_hex(t).map_err(de::Error::custom)).collect()
    }
}

/// `#[serde(with = "hexint::opt_vec")]`: each element is a hex string or null.
pub mod opt_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(values: &[Option<BigUint>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&v.as_ref().map(to_hex))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<BigUint>>, D::Error> {
        let texts = Vec::<Option<String>>::deserialize(d)?;
        texts
            .iter()
            .map(|t| match t {
                Some(t) => from_hex(t).map(Some).map_err(de::Error::custom),
                None => Ok(None),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(to_hex(&BigUint::from(0u32)), "0");
        assert_eq!(to_hex(&BigUint::from(255u32)), "ff");
        assert_eq!(from_hex("0").unwrap(), BigUint::from(0u32));
        for bad in ["", "00", "0f", "FF", "0x1", " 1", "g"] {
            assert!(from_hex(bad).is_err(), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..80)) {
            let v = BigUint::from_bytes_be(&bytes);
            let text = to_hex(&v);
            prop_assert_eq!(from_hex(&text).unwrap(), v);
        }
    }
}
