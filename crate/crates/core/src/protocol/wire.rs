//! JSON envelope for protocol messages:
//! `{"type": "enroll"|"round1"|"round2"|"round3", "user_id": "...", "payload": ["<hex>", ...]}`.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EnrollmentRecord, Round1Message, Round2Message, Round3Message};
use crate::hexint;
use crate::paillier::Ciphertext;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("cannot decode message: {0}")]
    Decode(String),
    #[error("expected a {expected:?} message, got {got:?}")]
    UnexpectedKind { expected: MessageKind, got: MessageKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageKind {
    Enroll,
    Round1,
    Round2,
    Round3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolMessage {
    #[serde(rename = "type")]
    pub kind: MessageKind,
    pub user_id: String,
    #[serde(with = "hexint::vec")]
    pub payload: Vec<BigUint>,
}

impl ProtocolMessage {
    pub fn enroll(record: EnrollmentRecord) -> Self {
        ProtocolMessage {
            kind: MessageKind::Enroll,
            user_id: record.user_id,
            payload: record.c.into_iter().map(Ciphertext::into_value).collect(),
        }
    }

    pub fn round1(user_id: &str, msg: Round1Message) -> Self {
        Self::with(MessageKind::Round1, user_id, msg.c_star)
    }

    pub fn round2(user_id: &str, msg: Round2Message) -> Self {
        Self::with(MessageKind::Round2, user_id, msg.c_prime)
    }

    pub fn round3(user_id: &str, msg: Round3Message) -> Self {
        Self::with(MessageKind::Round3, user_id, msg.d)
    }

    fn with(kind: MessageKind, user_id: &str, payload: Vec<BigUint>) -> Self {
        ProtocolMessage {
            kind,
            user_id: user_id.to_owned(),
            payload,
        }
    }

    fn expect(&self, kind: MessageKind) -> Result<(), WireError> {
        if self.kind != kind {
            return Err(WireError::UnexpectedKind {
                expected: kind,
                got: self.kind,
            });
        }
        Ok(())
    }

    /// Enrollment record carried by an `enroll` message. Entries are not
    /// validated against a key here; the receiver does that.
    pub fn to_enrollment(&self, pk: &crate::paillier::PublicKey) -> Result<EnrollmentRecord, super::ProtocolError> {
        self.expect(MessageKind::Enroll)?;
        let c = self
            .payload
            .iter()
            .map(|v| Ciphertext::new(pk, v.clone()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| super::ProtocolError::MalformedMessage(e.to_string()))?;
        Ok(EnrollmentRecord {
            user_id: self.user_id.clone(),
            c,
        })
    }

    pub fn to_round1(&self) -> Result<Round1Message, WireError> {
        self.expect(MessageKind::Round1)?;
        Ok(Round1Message {
            c_star: self.payload.clone(),
        })
    }

    pub fn to_round2(&self) -> Result<Round2Message, WireError> {
        self.expect(MessageKind::Round2)?;
        Ok(Round2Message {
            c_prime: self.payload.clone(),
        })
    }

    pub fn to_round3(&self) -> Result<Round3Message, WireError> {
        self.expect(MessageKind::Round3)?;
        Ok(Round3Message {
            d: self.payload.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("message serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, WireError> {
        serde_json::from_str(text).map_err(|e| WireError::Decode(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wire_shape() {
        let msg = ProtocolMessage::round2(
            "alice",
            Round2Message {
                c_prime: vec![BigUint::from(31u32), BigUint::from(0u32)],
            },
        );
        assert_eq!(
            msg.to_json(),
            r#"{"type":"round2","user_id":"alice","payload":["1f","0"]}"#
        );
        assert_eq!(ProtocolMessage::from_json(&msg.to_json()).unwrap(), msg);
    }

    #[test]
    fn kind_checks() {
        let msg = ProtocolMessage::round1("u", Round1Message { c_star: vec![] });
        assert!(msg.to_round1().is_ok());
        assert_eq!(
            msg.to_round3().unwrap_err(),
            WireError::UnexpectedKind {
                expected: MessageKind::Round3,
                got: MessageKind::Round1
            }
        );
        assert!(ProtocolMessage::from_json(r#"{"type":"round4","user_id":"u","payload":[]}"#).is_err());
        assert!(ProtocolMessage::from_json(r#"{"type":"round1","user_id":"u","payload":["0A"]}"#).is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip(
            user in "[a-z0-9_-]{0,12}",
            values in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..40), 0..6),
            kind in 0u8..4,
        ) {
            let payload: Vec<BigUint> = values.iter().map(|b| BigUint::from_bytes_be(b)).collect();
            let kind = [MessageKind::Enroll, MessageKind::Round1, MessageKind::Round2, MessageKind::Round3][kind as usize];
            let msg = ProtocolMessage { kind, user_id: user, payload };
            let text = msg.to_json();
            let back = ProtocolMessage::from_json(&text).unwrap();
            prop_assert_eq!(&back, &msg);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
