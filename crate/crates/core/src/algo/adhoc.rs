//! Algorithms for 1-activating channels: Counting-Backoff, Quadruple-Round
//! and Queue-Backoff, run here on a perpetual channel of `n` stations.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::channel::{Control, Decision, Feedback, Round};
use crate::station::{Observation, Probe, Station};

/// Counting-Backoff: active stations form a stack, each remembering its
/// distance `c` from the top. The top transmits; a newly activated station
/// transmits at once and, on collision, becomes the new top while everyone
/// else moves one place down. Silence means the top has left, so every
/// station moves one place up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CountingBackoff {
    #[default]
    Idle,
    Joining,
    Placed(u64),
}

impl Station for CountingBackoff {
    fn observe(&mut self, obs: &Observation<'_>) -> Decision {
        *self = match (*self, obs.feedback) {
            (CountingBackoff::Idle, _) => CountingBackoff::Joining,
            (CountingBackoff::Joining, _) => CountingBackoff::Placed(0),
            (CountingBackoff::Placed(c), Some(Feedback::Collision)) => {
                CountingBackoff::Placed(c + 1)
            }
            (CountingBackoff::Placed(c), Some(Feedback::Silence)) => {
                CountingBackoff::Placed(c.saturating_sub(1))
            }
            (state, _) => state,
        };
        match self {
            CountingBackoff::Joining | CountingBackoff::Placed(0) => Decision::HEAD,
            _ => Decision::Pause,
        }
    }

    fn reset(&mut self) {
        *self = CountingBackoff::Idle;
    }

    fn probe(&self) -> Probe {
        match self {
            CountingBackoff::Placed(c) => Probe::StackCounter(Some(*c)),
            _ => Probe::StackCounter(None),
        }
    }
}

/// A node of the 7-node tree over the four rounds of a segment, covering
/// leaves `[lo, lo + len)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct SegmentNode {
    lo: u8,
    len: u8,
}

const SEGMENT_ROOT: SegmentNode = SegmentNode { lo: 0, len: 4 };

impl SegmentNode {
    fn covers(&self, leaf: u8) -> bool {
        self.lo <= leaf && leaf < self.lo + self.len
    }
}

/// Quadruple-Round: rounds are grouped into segments of four. Segments are
/// processed one after another, never before the segment has elapsed. A
/// segment is processed in iterations of a depth-first search over the
/// binary tree on its four rounds; at a node, the stations activated in a
/// round under the node transmit. Collision descends to the left child,
/// silence or a heard message prunes the node (no withholding). When the
/// search is exhausted a new iteration starts at the root; silence at the
/// root closes the segment.
#[derive(Clone, Debug)]
pub struct QuadrupleRound {
    segment: u64,
    /// Whether the round about to be played is a processing round.
    processing: bool,
    node: SegmentNode,
    pending: Vec<SegmentNode>,
    /// Segment and leaf of this station's activation round.
    activation: Option<(u64, u8)>,
}

impl Default for QuadrupleRound {
    fn default() -> Self {
        QuadrupleRound {
            segment: 0,
            processing: false,
            node: SEGMENT_ROOT,
            pending: Vec::new(),
            activation: None,
        }
    }
}

impl QuadrupleRound {
    pub fn segment(&self) -> u64 {
        self.segment
    }

    fn advance(&mut self, feedback: &Feedback) {
        match feedback {
            Feedback::Collision if self.node.len > 1 => {
                let half = self.node.len / 2;
                self.pending.push(SegmentNode {
                    lo: self.node.lo + half,
                    len: half,
                });
                self.node = SegmentNode {
                    lo: self.node.lo,
                    len: half,
                };
            }
            Feedback::Silence if self.node == SEGMENT_ROOT && self.pending.is_empty() => {
                self.segment += 1;
            }
            _ => self.node = self.pending.pop().unwrap_or(SEGMENT_ROOT),
        }
    }
}

impl Station for QuadrupleRound {
    fn observe(&mut self, obs: &Observation<'_>) -> Decision {
        if let (true, Some(fb)) = (self.processing, obs.feedback) {
            self.advance(fb);
        }
        if obs.queue.is_empty() {
            self.activation = None;
        } else if obs.injected == obs.queue.len() {
            self.activation = Some((obs.round / 4, (obs.round % 4) as u8));
        }
        let next: Round = obs.round + 1;
        self.processing = next >= 4 * self.segment + 4;
        match self.activation {
            Some((segment, leaf))
                if self.processing && segment == self.segment && self.node.covers(leaf) =>
            {
                Decision::HEAD
            }
            _ => Decision::Pause,
        }
    }

    fn reset(&mut self) {
        *self = QuadrupleRound::default();
    }

    fn probe(&self) -> Probe {
        let mut h = DefaultHasher::new();
        (self.segment, self.processing, self.node, &self.pending).hash(&mut h);
        Probe::Replicated(h.finish())
    }
}

/// Queue-Backoff: active stations form a distributed FIFO queue. The front
/// transmits its packets with the queue size `q` and an over bit on the
/// last one. A new station transmits once on activation; the resulting
/// void round tells everyone the queue grew. When the joiner next hears a
/// message it derives its position from `q` minus the void rounds that
/// followed its own attempt. Works without collision detection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum QueueBackoff {
    #[default]
    Idle,
    Joining {
        round: Round,
        voids: u64,
    },
    Placed {
        position: u64,
        size: u64,
    },
}

impl QueueBackoff {
    fn transmit(&self, obs: &Observation<'_>) -> Decision {
        let over = obs.queue.len() == 1;
        match *self {
            QueueBackoff::Joining { round, .. } if round == obs.round + 1 => Decision::Transmit {
                packet: true,
                control: Control::QueueSize { size: 0, over },
            },
            QueueBackoff::Placed { position: 0, size } => Decision::Transmit {
                packet: true,
                control: Control::QueueSize { size, over },
            },
            _ => Decision::Pause,
        }
    }
}

impl Station for QueueBackoff {
    fn observe(&mut self, obs: &Observation<'_>) -> Decision {
        let joining = QueueBackoff::Joining {
            round: obs.round + 1,
            voids: 0,
        };
        let Some(fb) = obs.feedback else {
            *self = joining;
            return self.transmit(obs);
        };
        *self = match (*self, fb) {
            (QueueBackoff::Idle, _) => joining,
            (QueueBackoff::Joining { round, voids }, Feedback::Heard(m)) => match m.control {
                _ if obs.transmitted && round == obs.round => match m.control {
                    Control::QueueSize { over: true, .. } => joining,
                    _ => QueueBackoff::Placed {
                        position: 0,
                        size: 1,
                    },
                },
                Control::QueueSize { size, over } if size > voids => {
                    let position = size - 1 - voids;
                    if over {
                        QueueBackoff::Placed {
                            position: position.saturating_sub(1),
                            size: size - 1,
                        }
                    } else {
                        QueueBackoff::Placed { position, size }
                    }
                }
                _ => QueueBackoff::Joining { round, voids },
            },
            (QueueBackoff::Joining { round, voids }, _) => {
                let voids = if obs.round > round { voids + 1 } else { voids };
                QueueBackoff::Joining { round, voids }
            }
            (QueueBackoff::Placed { position, size }, Feedback::Heard(m)) => match m.control {
                Control::QueueSize { over: true, .. } if position == 0 => joining,
                Control::QueueSize { over: true, .. } => QueueBackoff::Placed {
                    position: position - 1,
                    size: size.saturating_sub(1),
                },
                _ => QueueBackoff::Placed { position, size },
            },
            (QueueBackoff::Placed { position, size }, _) => QueueBackoff::Placed {
                position,
                size: size + 1,
            },
        };
        self.transmit(obs)
    }

    fn reset(&mut self) {
        *self = QueueBackoff::Idle;
    }

    fn probe(&self) -> Probe {
        match self {
            QueueBackoff::Placed { position, .. } => Probe::QueuePosition(Some(*position)),
            _ => Probe::QueuePosition(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::testing::{run_script, Outcome};
    use crate::algo::Algorithm;
    use crate::channel::{Message, Packet};
    use std::collections::VecDeque;

    #[test]
    fn counting_backoff_hand_trace() {
        // A (station 0) is the top with two packets; B (station 1) joins
        // with one packet while A is still transmitting
        let script = vec![vec![(0, 3)], vec![(1, 1)]];
        let out = run_script(Algorithm::CountingBackoff, 2, true, &script, 8);
        assert_eq!(
            out[1..7],
            [
                Outcome::Heard(0),
                Outcome::Collision,
                Outcome::Heard(1),
                Outcome::Silence,
                Outcome::Heard(0),
                Outcome::Heard(0),
            ]
        );
    }

    #[test]
    fn counting_backoff_counters() {
        let mut a = CountingBackoff::Placed(0);
        let q: VecDeque<Packet> = [Packet::new(0, 0, 0)].into();
        let obs = |fb: &'static Feedback| Observation {
            round: 3,
            feedback: Some(fb),
            transmitted: true,
            injected: 0,
            queue: &q,
        };
        a.observe(&obs(&Feedback::Collision));
        assert_eq!(a, CountingBackoff::Placed(1));
        a.observe(&obs(&Feedback::Silence));
        assert_eq!(a, CountingBackoff::Placed(0));
        let mut b = CountingBackoff::Idle;
        assert_eq!(b.observe(&obs(&Feedback::Silence)), Decision::HEAD);
        b.observe(&obs(&Feedback::Collision));
        assert_eq!(b, CountingBackoff::Placed(0));
    }

    #[test]
    fn counting_backoff_lone_activation_heard_at_once() {
        let out = run_script(
            Algorithm::CountingBackoff,
            4,
            true,
            &[vec![], vec![(2, 1)]],
            4,
        );
        assert_eq!(out[2], Outcome::Heard(2));
    }

    #[test]
    fn quadruple_single_activation() {
        // activated at round 2 of segment 0; processing starts at round 4
        let out = run_script(
            Algorithm::QuadrupleRound,
            4,
            true,
            &[vec![], vec![], vec![(1, 1)]],
            8,
        );
        assert_eq!(out[4..6], [Outcome::Heard(1), Outcome::Silence]);
        assert!(out[..4].iter().all(|o| *o == Outcome::Silence));
    }

    #[test]
    fn quadruple_empty_segment_takes_one_round() {
        let mut s = QuadrupleRound::default();
        let q = VecDeque::new();
        for round in 0..12 {
            let fb = Feedback::Silence;
            let feedback = (round > 0).then_some(&fb);
            s.observe(&Observation {
                round,
                feedback,
                transmitted: false,
                injected: 0,
                queue: &q,
            });
        }
        // segments 0 and 1 each close with one root-silence round, at
        // rounds 4 and 8; segment 2 has not elapsed yet
        assert_eq!(s.segment(), 2);
    }

    #[test]
    fn quadruple_three_activations_within_seven_rounds() {
        let script = vec![vec![(0, 1)], vec![(1, 1)], vec![], vec![(2, 1)]];
        let out = run_script(Algorithm::QuadrupleRound, 3, true, &script, 12);
        let processing = &out[4..11];
        let heard = processing
            .iter()
            .filter(|o| matches!(o, Outcome::Heard(_)))
            .count();
        assert_eq!(heard, 3, "{processing:?}");
        // root, left child, two leaves, right child, closing root
        assert_eq!(
            processing[..6],
            [
                Outcome::Collision,
                Outcome::Collision,
                Outcome::Heard(0),
                Outcome::Heard(1),
                Outcome::Heard(2),
                Outcome::Silence,
            ]
        );
    }

    #[test]
    fn queue_backoff_lone_activation_delay_one() {
        let out = run_script(Algorithm::QueueBackoff, 3, false, &[vec![(1, 1)]], 3);
        assert_eq!(out[1], Outcome::Heard(1));
    }

    #[test]
    fn queue_backoff_joiner_positions() {
        let q: VecDeque<Packet> = [Packet::new(0, 0, 0), Packet::new(1, 0, 0)].into();
        let observe = |s: &mut QueueBackoff, round: Round, fb: Feedback, transmitted: bool| {
            s.observe(&Observation {
                round,
                feedback: Some(&fb),
                transmitted,
                injected: 0,
                queue: &q,
            });
        };
        let r = 10;
        // A activated at r-1 joins (transmits) at r; B joins at r+1
        let mut a = QueueBackoff::Idle;
        observe(&mut a, r - 1, Feedback::Void, false);
        let mut b = QueueBackoff::Idle;
        observe(&mut a, r, Feedback::Void, true);
        observe(&mut b, r, Feedback::Void, false);
        observe(&mut a, r + 1, Feedback::Void, false);
        observe(&mut b, r + 1, Feedback::Void, true);
        let size = 5;
        let msg = Message {
            sender: 9,
            payload: None,
            control: Control::QueueSize { size, over: false },
        };
        observe(&mut a, r + 2, Feedback::Heard(msg), false);
        observe(&mut b, r + 2, Feedback::Heard(msg), false);
        assert_eq!(
            a,
            QueueBackoff::Placed {
                position: size - 2,
                size
            }
        );
        assert_eq!(
            b,
            QueueBackoff::Placed {
                position: size - 1,
                size
            }
        );
    }

    #[test]
    fn queue_backoff_front_hands_over() {
        // front with 2 packets; a joiner collides with it, then takes over
        let script = vec![vec![(0, 2)], vec![(1, 1)]];
        let out = run_script(Algorithm::QueueBackoff, 2, false, &script, 6);
        assert_eq!(
            out[1..5],
            [
                Outcome::Heard(0),
                Outcome::Collision,
                Outcome::Heard(0),
                Outcome::Heard(1)
            ]
        );
    }
}
