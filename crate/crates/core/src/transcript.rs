//! Append-only record of one authentication session.
//!
//! On disk a transcript is JSON Lines: one line per delivered message, then a
//! trailing outcome line carrying the decision and the server's ephemeral
//! `r'` vector (needed to re-run the decision step).

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::hexint;
use crate::protocol::{Decision, ProtocolMessage, WireError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("outcome record must be the last line")]
    OutcomeNotLast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    UserToServer,
    ServerToUser,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub direction: Direction,
    /// Logical clock of the delivery. Wall-clock time would break replay.
    pub timestamp: u64,
    /// Exact JSON bytes delivered to the receiving endpoint.
    pub raw: String,
}

impl TranscriptEntry {
    pub fn message(&self) -> Result<ProtocolMessage, WireError> {
        ProtocolMessage::from_json(&self.raw)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    session_id: String,
    entries: Vec<TranscriptEntry>,
    clock: u64,
    server_ephemerals: Option<Vec<BigUint>>,
    outcome: Option<Decision>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryLine<'a> {
    session_id: String,
    seq: u64,
    direction: Direction,
    timestamp: u64,
    #[serde(borrow)]
    message: &'a RawValue,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeLine {
    session_id: String,
    outcome: Decision,
    #[serde(with = "hexint::vec")]
    r_prime: Vec<BigUint>,
}

impl Transcript {
    pub fn new(session_id: impl Into<String>) -> Self {
        Transcript {
            session_id: session_id.into(),
            entries: Vec::new(),
            clock: 0,
            server_ephemerals: None,
            outcome: None,
        }
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn outcome(&self) -> Option<&Decision> {
        self.outcome.as_ref()
    }

    pub fn server_ephemerals(&self) -> Option<&[BigUint]> {
        self.server_ephemerals.as_deref()
    }

    pub fn record(&mut self, direction: Direction, message: &ProtocolMessage) {
        self.record_raw(direction, message.to_json());
    }

    /// `raw` must be the JSON of a [`ProtocolMessage`].
    pub(crate) fn record_raw(&mut self, direction: Direction, raw: String) {
        self.clock += 1;
        self.entries.push(TranscriptEntry {
            seq: self.entries.len() as u64,
            direction,
            timestamp: self.clock,
            raw,
        });
    }

    pub fn set_server_ephemerals(&mut self, r_prime: Vec<BigUint>) {
        self.server_ephemerals = Some(r_prime);
    }

    pub fn set_outcome(&mut self, decision: Decision) {
        self.outcome = Some(decision);
    }

    /// Entries travelling in one direction, in delivery order.
    pub fn delivered(&self, direction: Direction) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries.iter().filter(move |e| e.direction == direction)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let message = RawValue::from_string(e.raw.clone()).expect("entries hold valid JSON");
            let line = EntryLine {
                session_id: self.session_id.clone(),
                seq: e.seq,
                direction: e.direction,
                timestamp: e.timestamp,
                message: &message,
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        if let Some(outcome) = &self.outcome {
            let line = OutcomeLine {
                session_id: self.session_id.clone(),
                outcome: outcome.clone(),
                r_prime: self.server_ephemerals.clone().unwrap_or_default(),
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TranscriptError> {
        let mut transcript = Transcript::new("");
        let mut done = false;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let line_no = i + 1;
            if done {
                return Err(TranscriptError::OutcomeNotLast);
            }
            let parse_err = |e: serde_json::Error| TranscriptError::Parse {
                line: line_no,
                reason: e.to_string(),
            };
            let value: serde_json::Value = serde_json::from_str(line).map_err(parse_err)?;
            if value.get("outcome").is_some() {
                let rec: OutcomeLine = serde_json::from_str(line).map_err(parse_err)?;
                transcript.session_id = rec.session_id;
                transcript.outcome = Some(rec.outcome);
                transcript.server_ephemerals = Some(rec.r_prime);
                done = true;
            } else {
                let rec: EntryLine = serde_json::from_str(line).map_err(parse_err)?;
                transcript.session_id = rec.session_id;
                transcript.clock = rec.timestamp;
                transcript.entries.push(TranscriptEntry {
                    seq: rec.seq,
                    direction: rec.direction,
                    timestamp: rec.timestamp,
                    raw: rec.message.get().to_owned(),
                });
            }
        }
        Ok(transcript)
    }
}
