//! The two attacks on the protocol.
//!
//! * [`curious`]: the AS follows the protocol and then decrypts what it was
//!   sent. It recovers the sampled features `b`, the user key `x mod n` and
//!   the template `a`.
//! * [`mitm`]: an on-path adversary without the private key swaps the
//!   round-2 message for a forgery, reads `b` off the reply, and forwards the
//!   reply the AS expected so nobody notices.
//!
//! Divisions in the recovery formulas are multiplications by inverses mod `n`.
//! A coordinate whose divisor is not a unit is reported as unrecoverable
//! rather than failing the whole attack.

pub mod curious;
pub mod mitm;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hexint;
use crate::paillier::PaillierError;
use crate::protocol::ProtocolError;

pub use curious::{
    curious_recover_b, curious_recover_sums, curious_recover_x_and_a, curious_server_attack, CuriousServerView,
};
pub use mitm::{mitm_cover_forward, mitm_forge_round2, mitm_forge_round2_with, mitm_recover_b, MitmState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("length mismatch: expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("forgery mismatch at coordinate {index}: victim did not answer the forged message")]
    ForgeryMismatch { index: usize },
    #[error("attack state error: {0}")]
    State(String),
    #[error(transparent)]
    Paillier(#[from] PaillierError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<(), AttackError> {
    if expected != got {
        return Err(AttackError::LengthMismatch { expected, got });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    CuriousServer,
    ActiveMitm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    B,
    X,
    A,
}

/// One coordinate that could not be recovered, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryFlag {
    pub quantity: Quantity,
    pub index: usize,
    pub reason: String,
}

/// Per-coordinate result: a residue mod `n`, or `None` when unrecoverable.
pub type Recovered = Vec<Option<BigUint>>;

/// What an attack extracted. Quantities an attack cannot reach are absent
/// from the JSON form. `verified` is filled in by whoever holds the
/// ground truth; attacks always emit `false`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackReport {
    pub attack: AttackKind,
    #[serde(with = "hexint::opt_vec")]
    pub recovered_b: Recovered,
    #[serde(default, with = "opt_recovered", skip_serializing_if = "Option::is_none")]
    pub recovered_x_mod_n: Option<Recovered>,
    #[serde(default, with = "opt_recovered", skip_serializing_if = "Option::is_none")]
    pub recovered_a: Option<Recovered>,
    pub verified: bool,
    pub flags: Vec<RecoveryFlag>,
}

impl AttackReport {
    pub fn is_complete(&self) -> bool {
        self.flags.is_empty()
    }
}

mod opt_recovered {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<Recovered>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => hexint::opt_vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Recovered>, D::Error> {
        let raw = Option::<Vec<Option<String>>>::deserialize(d)?;
        raw.map(|items| {
            items
                .into_iter()
                .map(|t| t.map(|t| hexint::from_hex(&t)).transpose())
                .collect::<Result<Vec<_>, _>>()
                .map_err(serde::de::Error::custom)
        })
        .transpose()
    }
}
