//! Scenario runner: wires the parties through a [`Channel`], runs honest and
//! adversarial sessions, checks attack output against the hidden truth and
//! replays recorded transcripts.

pub mod channel;
mod scenario;

/// Stream ids of the per-party generators derived from one `SeedMaterial`.
pub mod streams {
    pub const KEYGEN_STREAM: u64 = 0;
    pub const ENROLL_STREAM: u64 = 1;
    /// Enrollment template `a`.
    pub const FEATURE_STREAM: u64 = 2;
    pub const USER_STREAM: u64 = 3;
    pub const SERVER_STREAM: u64 = 4;
    pub const ADVERSARY_STREAM: u64 = 5;
    /// Authentication-time feature vector `b`.
    pub const SAMPLE_STREAM: u64 = 6;
}

pub use channel::{Channel, IdentityInterposer, Interposer};
pub use scenario::{
    run_faulty_mitm, run_honest_through, run_scenario, run_with_setup, KnowledgeAudit, MitmInterposer, ScenarioKind,
    ScenarioParams, ScenarioResult, ScenarioSetup, StealthCheck,
};

use num_bigint::BigUint;
use thiserror::Error;

use crate::attacks::{AttackError, AttackKind, AttackReport};
use crate::paillier::{PaillierError, PrivateKey};
use crate::protocol::{self, FeatureVector, MessageKind, ProtocolError, ServerSession, WireError};
use crate::transcript::{Direction, Transcript, TranscriptError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Paillier(#[from] PaillierError),
    #[error("harness state: {0}")]
    State(String),
    #[error("transcript is truncated: {0}")]
    Truncated(String),
    #[error("invalid scenario configuration: {0}")]
    Config(String),
}

/// Values the harness knows and the attacks are scored against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenTruth {
    pub a: FeatureVector,
    pub b: FeatureVector,
    pub x: Vec<BigUint>,
}

/// True iff every quantity the report is supposed to contain matches the truth.
///
/// `x` is compared mod `n`, since that is all the decryption reveals. A MitM
/// report must leave `x` and `a` empty.
pub fn ground_truth_compare(report: &AttackReport, truth: &HiddenTruth, n: &BigUint) -> bool {
    let b_ok = report.recovered_b.len() == truth.b.len()
        && report
            .recovered_b
            .iter()
            .zip(truth.b.elements())
            .all(|(got, &want)| got.as_ref() == Some(&BigUint::from(want)));
    if !b_ok || !report.flags.is_empty() {
        return false;
    }
    match report.attack {
        AttackKind::ActiveMitm => report.recovered_x_mod_n.is_none() && report.recovered_a.is_none(),
        AttackKind::CuriousServer => {
            let x_ok = report.recovered_x_mod_n.as_ref().is_some_and(|xs| {
                xs.len() == truth.x.len()
                    && xs
                        .iter()
                        .zip(&truth.x)
                        .all(|(got, want)| got.as_ref() == Some(&(want % n)))
            });
            let a_ok = report.recovered_a.as_ref().is_some_and(|a| {
                a.len() == truth.a.len()
                    && a.iter()
                        .zip(truth.a.elements())
                        .all(|(got, &want)| got.as_ref() == Some(&BigUint::from(want)))
            });
            x_ok && a_ok
        }
    }
}

/// Recompute the AS decision from a recorded transcript.
///
/// Uses the round-1 and round-3 messages the AS received, the recorded `r'`,
/// and the threshold of the recorded outcome.
pub fn replay(transcript: &Transcript, sk: &PrivateKey) -> Result<protocol::Decision, HarnessError> {
    let outcome = transcript
        .outcome()
        .ok_or_else(|| HarnessError::Truncated("no outcome record".into()))?;
    let r_prime = transcript
        .server_ephemerals()
        .ok_or_else(|| HarnessError::Truncated("no recorded r'".into()))?;

    let mut round1 = None;
    let mut round3 = None;
    for entry in transcript.delivered(Direction::UserToServer) {
        let message = entry.message()?;
        match message.kind {
            MessageKind::Round1 => round1 = Some(message),
            MessageKind::Round3 => round3 = Some(message),
            _ => {}
        }
    }
    let round1 = round1.ok_or_else(|| HarnessError::Truncated("no round-1 message".into()))?;
    let round3 = round3.ok_or_else(|| HarnessError::Truncated("no round-3 message".into()))?;

    let mut session = ServerSession::restore(sk, round1.user_id.clone(), r_prime.to_vec(), &round1.to_round1()?)?;
    Ok(protocol::server_decide(
        sk,
        &mut session,
        &round3.to_round3()?,
        &outcome.threshold,
    )?)
}
