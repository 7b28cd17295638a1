//! Channel primitives: packets, messages, ground-truth events and the
//! feedback stations actually see.

pub type StationId = usize;
pub type PacketId = u64;
pub type Round = u64;

/// A packet owned by a station queue until it is heard on the channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Packet {
    pub id: PacketId,
    pub station: StationId,
    pub injected_round: Round,
    pub delivered_round: Option<Round>,
}

impl Packet {
    pub fn new(id: PacketId, station: StationId, injected_round: Round) -> Self {
        Packet {
            id,
            station,
            injected_round,
            delivered_round: None,
        }
    }

    /// Rounds between injection and delivery, once delivered.
    pub fn delay(&self) -> Option<u64> {
        self.delivered_round.map(|d| d - self.injected_round)
    }
}

/// Control bits attached to a message. Plain-packet algorithms always send
/// [`Control::None`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Control {
    #[default]
    None,
    /// Move-Big-To-Front: sender's queue reached the big threshold.
    Big(bool),
    /// Queue-Backoff: the sender's view of the distributed queue size and
    /// whether this is its last pending packet.
    QueueSize { size: u64, over: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Message {
    pub sender: StationId,
    pub payload: Option<Packet>,
    pub control: Control,
}

/// Ground truth of one round, fixed by the number of transmitters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelEvent {
    Silence,
    Heard(Message),
    Collision,
}

/// What every station observes about a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Feedback {
    Silence,
    Heard(Message),
    Collision,
    /// Silence or collision on a channel without collision detection.
    Void,
}

impl Feedback {
    pub fn heard(&self) -> Option<&Message> {
        match self {
            Feedback::Heard(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_void(&self) -> bool {
        !matches!(self, Feedback::Heard(_))
    }
}

/// A station's choice for the coming round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Decision {
    #[default]
    Pause,
    /// Transmit the head of the queue (when `packet` is set) with the given
    /// control bits.
    Transmit { packet: bool, control: Control },
}

impl Decision {
    /// Plain-packet transmission of the queue head.
    pub const HEAD: Decision = Decision::Transmit {
        packet: true,
        control: Control::None,
    };

    pub fn transmits(&self) -> bool {
        matches!(self, Decision::Transmit { .. })
    }
}

/// Resolves simultaneous transmissions into the round's event.
pub fn compute_feedback(transmissions: &[Message]) -> ChannelEvent {
    match transmissions {
        [] => ChannelEvent::Silence,
        [only] => ChannelEvent::Heard(*only),
        _ => ChannelEvent::Collision,
    }
}

/// Station-visible projection of an event.
pub fn project_feedback(event: &ChannelEvent, collision_detection: bool) -> Feedback {
    match (event, collision_detection) {
        (ChannelEvent::Heard(m), _) => Feedback::Heard(*m),
        (ChannelEvent::Silence, true) => Feedback::Silence,
        (ChannelEvent::Collision, true) => Feedback::Collision,
        (_, false) => Feedback::Void,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(sender: StationId, id: PacketId) -> Message {
        Message {
            sender,
            payload: Some(Packet::new(id, sender, 0)),
            control: Control::None,
        }
    }

    #[test]
    fn feedback_by_transmitter_count() {
        assert_eq!(compute_feedback(&[]), ChannelEvent::Silence);
        assert_eq!(
            compute_feedback(&[msg(3, 7)]),
            ChannelEvent::Heard(msg(3, 7))
        );
        assert_eq!(
            compute_feedback(&[msg(1, 2), msg(4, 9)]),
            ChannelEvent::Collision
        );
    }

    #[test]
    fn projection_without_collision_detection() {
        assert_eq!(
            project_feedback(&ChannelEvent::Collision, true),
            Feedback::Collision
        );
        assert_eq!(
            project_feedback(&ChannelEvent::Collision, false),
            Feedback::Void
        );
        assert_eq!(
            project_feedback(&ChannelEvent::Silence, false),
            Feedback::Void
        );
        assert_eq!(
            project_feedback(&ChannelEvent::Silence, true),
            Feedback::Silence
        );
        let heard = ChannelEvent::Heard(msg(0, 1));
        assert_eq!(project_feedback(&heard, false), Feedback::Heard(msg(0, 1)));
    }
}
