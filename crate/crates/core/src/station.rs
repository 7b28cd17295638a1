//! The contract every station automaton implements.

use std::collections::VecDeque;

use crate::channel::{Decision, Feedback, Packet, Round};

/// How an algorithm listens to the channel; the engine enforces it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    /// Every station processes every round's feedback.
    FullSensing,
    /// Passive stations are not invoked and are held in their initial state.
    ActivationBased,
    /// Activation based, and additionally reset to the initial state after
    /// each of the station's own successful transmissions.
    AcknowledgementBased,
}

/// Everything a station learns at the end of a round.
#[derive(Debug)]
pub struct Observation<'a> {
    pub round: Round,
    /// `None` only for the opening round 0, in which no station can hold a
    /// packet and therefore the channel is necessarily silent.
    pub feedback: Option<&'a Feedback>,
    /// Whether this station transmitted in the round.
    pub transmitted: bool,
    /// Packets injected into this station in the round.
    pub injected: usize,
    /// The station's queue after this round's delivery and injections.
    pub queue: &'a VecDeque<Packet>,
}

impl Observation<'_> {
    /// True when this station's own message was the one heard.
    pub fn own_success(&self) -> bool {
        self.transmitted && matches!(self.feedback, Some(Feedback::Heard(_)))
    }
}

/// Debug view of protocol state used by the engine's invariant checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    None,
    /// Digest of control state that every station replicates.
    Replicated(u64),
    /// Counting-Backoff: distance from the stack top, once placed.
    StackCounter(Option<u64>),
    /// Queue-Backoff: position in the distributed queue, once learned.
    QueuePosition(Option<u64>),
}

pub trait Station: Send {
    /// Processes the end of a round and commits the decision for the next.
    fn observe(&mut self, obs: &Observation<'_>) -> Decision;

    /// Returns the automaton to its initial state (randomness is kept).
    fn reset(&mut self);

    fn probe(&self) -> Probe {
        Probe::None
    }
}
