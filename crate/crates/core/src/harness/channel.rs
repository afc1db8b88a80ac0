use std::collections::VecDeque;

use super::HarnessError;
use crate::protocol::ProtocolMessage;
use crate::transcript::{Direction, Transcript};

/// Sees every in-flight message and returns the one to deliver.
pub trait Interposer {
    fn intercept(&mut self, direction: Direction, message: ProtocolMessage) -> Result<ProtocolMessage, HarnessError>;
}

/// Delivers everything unchanged.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityInterposer;

impl Interposer for IdentityInterposer {
    fn intercept(&mut self, _: Direction, message: ProtocolMessage) -> Result<ProtocolMessage, HarnessError> {
        Ok(message)
    }
}

/// FIFO link between the user device and the AS.
///
/// Each delivered message is recorded in the transcript as the exact bytes
/// the receiver gets, i.e. after any interposer rewrite.
pub struct Channel<'a> {
    queue: VecDeque<(Direction, String)>,
    interposer: Option<&'a mut dyn Interposer>,
    active: bool,
    transcript: Transcript,
}

impl<'a> Channel<'a> {
    pub fn new(session_id: impl Into<String>) -> Self {
        Channel {
            queue: VecDeque::new(),
            interposer: None,
            active: false,
            transcript: Transcript::new(session_id),
        }
    }

    /// Route all later deliveries through `interposer`. Only allowed before
    /// the first message is sent.
    pub fn install_interposer(&mut self, interposer: &'a mut dyn Interposer) -> Result<(), HarnessError> {
        if self.active {
            return Err(HarnessError::State(
                "cannot install an interposer during an active session".into(),
            ));
        }
        self.interposer = Some(interposer);
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn send(&mut self, direction: Direction, message: &ProtocolMessage) -> Result<(), HarnessError> {
        self.active = true;
        let raw = message.to_json();
        let delivered = match self.interposer.as_deref_mut() {
            Some(i) => {
                // The interposer works from the bytes on the wire, not the sender's value.
                let on_wire = ProtocolMessage::from_json(&raw)?;
                i.intercept(direction, on_wire)?.to_json()
            }
            None => raw,
        };
        self.transcript.record_raw(direction, delivered.clone());
        self.queue.push_back((direction, delivered));
        Ok(())
    }

    pub fn receive(&mut self, direction: Direction) -> Result<ProtocolMessage, HarnessError> {
        match self.queue.front() {
            Some((d, _)) if *d == direction => {
                let (_, raw) = self.queue.pop_front().expect("front exists");
                Ok(ProtocolMessage::from_json(&raw)?)
            }
            Some((d, _)) => Err(HarnessError::State(format!(
                "next message travels {d:?}, receiver expected {direction:?}"
            ))),
            None => Err(HarnessError::State("channel is empty".into())),
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}
