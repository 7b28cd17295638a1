//! Full-sensing token algorithms: RRW, OF-RRW, SRR, OF-SRR and MBTF.
//!
//! Every station keeps a replica of the control state (token, search
//! cursor, station list) and updates it from the shared feedback alone.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::channel::{Control, Decision, Feedback, StationId};
use crate::station::{Observation, Probe, Station};

fn digest(value: impl Hash) -> u64 {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

/// Round-Robin-Withholding, optionally Old-First.
///
/// The token holder transmits while it has (old) packets; a void round
/// passes the token on. In the old-first variant a phase is one full token
/// cycle: packets present when the token returns to station 0 become old,
/// everything injected later waits for the next phase.
#[derive(Clone, Debug)]
pub struct RoundRobin {
    id: StationId,
    n: usize,
    old_first: bool,
    token: StationId,
    /// Old packets at the front of the queue (old-first only).
    old: usize,
}

impl RoundRobin {
    pub fn new(id: StationId, n: usize, old_first: bool) -> Self {
        RoundRobin {
            id,
            n,
            old_first,
            token: 0,
            old: 0,
        }
    }

    pub fn token(&self) -> StationId {
        self.token
    }
}

impl Station for RoundRobin {
    fn observe(&mut self, obs: &Observation<'_>) -> Decision {
        match obs.feedback {
            None => self.old = obs.queue.len(),
            Some(Feedback::Heard(_)) => {
                if obs.transmitted {
                    self.old = self.old.saturating_sub(1);
                }
            }
            Some(_) => {
                self.token = (self.token + 1) % self.n;
                if self.token == 0 {
                    self.old = obs.queue.len();
                }
            }
        }
        let eligible = if self.old_first {
            self.old > 0
        } else {
            !obs.queue.is_empty()
        };
        if self.token == self.id && eligible {
            Decision::HEAD
        } else {
            Decision::Pause
        }
    }

    fn reset(&mut self) {
        *self = RoundRobin::new(self.id, self.n, self.old_first);
    }

    fn probe(&self) -> Probe {
        Probe::Replicated(self.token as u64)
    }
}

/// A node of the balanced split tree over station ids `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub lo: usize,
    pub hi: usize,
}

impl Node {
    fn contains(&self, id: StationId) -> bool {
        self.lo <= id && id < self.hi
    }

    fn split(&self) -> (Node, Node) {
        let mid = (self.lo + self.hi) / 2;
        (
            Node {
                lo: self.lo,
                hi: mid,
            },
            Node {
                lo: mid,
                hi: self.hi,
            },
        )
    }
}

/// Search-Round-Robin, optionally Old-First.
///
/// A cycle is a depth-first search over a balanced binary tree whose leaves
/// are the stations. At the current node every eligible station below it
/// transmits. Collision descends to the left child and defers the right
/// one; a heard station keeps the channel while it has packets; silence
/// prunes the node. When no deferred node remains the cycle ends and the
/// search restarts at the root. The tree splits `[lo, hi)` at the midpoint,
/// so it has exactly `n` leaves and `2n - 1` nodes.
#[derive(Clone, Debug)]
pub struct SearchRoundRobin {
    id: StationId,
    n: usize,
    old_first: bool,
    cursor: Node,
    pending: Vec<Node>,
    old: usize,
}

impl SearchRoundRobin {
    pub fn new(id: StationId, n: usize, old_first: bool) -> Self {
        SearchRoundRobin {
            id,
            n,
            old_first,
            cursor: Node { lo: 0, hi: n },
            pending: Vec::new(),
            old: 0,
        }
    }

    pub fn cursor(&self) -> Node {
        self.cursor
    }

    fn root(&self) -> Node {
        Node { lo: 0, hi: self.n }
    }
}

impl Station for SearchRoundRobin {
    fn observe(&mut self, obs: &Observation<'_>) -> Decision {
        match obs.feedback {
            None => self.old = obs.queue.len(),
            Some(Feedback::Heard(_)) => {
                if obs.transmitted {
                    self.old = self.old.saturating_sub(1);
                }
            }
            Some(Feedback::Collision) if self.cursor.hi - self.cursor.lo > 1 => {
                let (left, right) = self.cursor.split();
                self.pending.push(right);
                self.cursor = left;
            }
            Some(_) => match self.pending.pop() {
                Some(next) => self.cursor = next,
                None => {
                    self.cursor = self.root();
                    self.old = obs.queue.len();
                }
            },
        }
        let eligible = if self.old_first {
            self.old > 0
        } else {
            !obs.queue.is_empty()
        };
        if self.cursor.contains(self.id) && eligible {
            Decision::HEAD
        } else {
            Decision::Pause
        }
    }

    fn reset(&mut self) {
        *self = SearchRoundRobin::new(self.id, self.n, self.old_first);
    }

    fn probe(&self) -> Probe {
        Probe::Replicated(digest((self.cursor, &self.pending)))
    }
}

/// Move-Big-To-Front.
///
/// The cursor station of list `L` transmits with the big bit set when its
/// queue holds at least `n` packets. A heard big station moves to the front
/// of `L`; the cursor stays on a heard station and advances on void rounds.
#[derive(Clone, Debug)]
pub struct MoveBigToFront {
    id: StationId,
    list: Vec<StationId>,
    cursor: usize,
}

impl MoveBigToFront {
    pub fn new(id: StationId, n: usize) -> Self {
        MoveBigToFront {
            id,
            list: (0..n).collect(),
            cursor: 0,
        }
    }

    pub fn list(&self) -> &[StationId] {
        &self.list
    }
}

impl Station for MoveBigToFront {
    fn observe(&mut self, obs: &Observation<'_>) -> Decision {
        match obs.feedback {
            None => {}
            Some(Feedback::Heard(m)) => {
                if m.control == Control::Big(true) {
                    let pos = self
                        .list
                        .iter()
                        .position(|&s| s == m.sender)
                        .expect("sender is listed");
                    let s = self.list.remove(pos);
                    self.list.insert(0, s);
                    self.cursor = 0;
                }
            }
            Some(_) => self.cursor = (self.cursor + 1) % self.list.len(),
        }
        if self.list[self.cursor] == self.id && !obs.queue.is_empty() {
            let big = obs.queue.len() >= self.list.len();
            Decision::Transmit {
                packet: true,
                control: Control::Big(big),
            }
        } else {
            Decision::Pause
        }
    }

    fn reset(&mut self) {
        *self = MoveBigToFront::new(self.id, self.list.len());
    }

    fn probe(&self) -> Probe {
        Probe::Replicated(digest((self.cursor, &self.list)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::testing::{run_preloaded, run_script, Outcome};
    use crate::algo::Algorithm;

    #[test]
    fn rrw_withholds_then_passes_token() {
        // station 0 gets two packets at round 0; the rounds after are
        // Heard, Heard and n silent rounds of token passing
        let out = run_script(Algorithm::Rrw, 3, true, &[vec![(0, 2)]], 6);
        assert_eq!(
            out[1..],
            [
                Outcome::Heard(0),
                Outcome::Heard(0),
                Outcome::Silence,
                Outcome::Silence,
                Outcome::Silence
            ]
        );
    }

    #[test]
    fn rrw_single_packet_delay_one() {
        let out = run_script(Algorithm::Rrw, 3, false, &[vec![(0, 1)]], 5);
        assert_eq!(out[1], Outcome::Heard(0));
    }

    #[test]
    fn of_rrw_waits_for_next_phase() {
        // a packet injected into station 2 while station 1 holds the token
        // is new and waits for the next phase
        let mut script = vec![vec![]; 3];
        script[2] = vec![(2, 1)];
        let out = run_script(Algorithm::OfRrw, 3, false, &script, 12);
        assert_eq!(out.iter().position(|o| *o == Outcome::Heard(2)), Some(6));
        let rrw = run_script(Algorithm::Rrw, 3, false, &script, 12);
        assert_eq!(rrw.iter().position(|o| *o == Outcome::Heard(2)), Some(3));
    }

    #[test]
    fn srr_single_station() {
        let out = run_script(Algorithm::Srr, 4, true, &[vec![(2, 1)]], 3);
        assert_eq!(out[1..], [Outcome::Heard(2), Outcome::Silence]);
    }

    #[test]
    fn srr_two_stations_takes_six_rounds() {
        let out = run_preloaded(Algorithm::Srr, 4, &[(0, 1), (3, 1)], 8);
        assert_eq!(
            out[..6],
            [
                Outcome::Collision,
                Outcome::Heard(0),
                Outcome::Silence,
                Outcome::Heard(3),
                Outcome::Silence,
                Outcome::Silence,
            ]
        );
    }

    #[test]
    fn srr_full_cycle_has_at_most_2n_minus_1_void_rounds() {
        for n in [1usize, 2, 3, 5, 10, 16] {
            let all: Vec<(StationId, u64)> = (0..n).map(|s| (s, 1)).collect();
            let out = run_preloaded(Algorithm::Srr, n, &all, 3 * n);
            let heard = out[..3 * n - 1]
                .iter()
                .filter(|o| matches!(o, Outcome::Heard(_)))
                .count();
            assert_eq!(heard, n, "n={n}: {out:?}");
        }
    }

    #[test]
    fn empty_srr_cycle_is_one_round() {
        let out = run_script(Algorithm::Srr, 4, true, &[], 10);
        assert!(out.iter().all(|o| *o == Outcome::Silence));
    }

    #[test]
    fn mbtf_moves_big_station_to_front() {
        let mut station = MoveBigToFront::new(0, 2);
        let big = crate::channel::Message {
            sender: 1,
            payload: None,
            control: Control::Big(true),
        };
        let queue = std::collections::VecDeque::new();
        let fb = Feedback::Heard(big);
        station.observe(&Observation {
            round: 1,
            feedback: Some(&fb),
            transmitted: false,
            injected: 0,
            queue: &queue,
        });
        assert_eq!(station.list(), &[1, 0]);
    }

    #[test]
    fn mbtf_small_queue_keeps_order() {
        let out = run_script(Algorithm::Mbtf, 2, false, &[vec![], vec![(1, 1)]], 6);
        assert!(out.contains(&Outcome::Heard(1)));
        let mut station = MoveBigToFront::new(1, 2);
        let small = crate::channel::Message {
            sender: 1,
            payload: None,
            control: Control::Big(false),
        };
        let queue = std::collections::VecDeque::new();
        let fb = Feedback::Heard(small);
        station.observe(&Observation {
            round: 1,
            feedback: Some(&fb),
            transmitted: true,
            injected: 0,
            queue: &queue,
        });
        assert_eq!(station.list(), &[0, 1]);
    }

    #[test]
    fn mbtf_big_bit_in_simulation() {
        // station 1 accumulates n = 2 packets, so its first message is big
        let out = run_preloaded(Algorithm::Mbtf, 2, &[(1, 2)], 6);
        assert_eq!(
            out[..3],
            [Outcome::Silence, Outcome::Heard(1), Outcome::Heard(1)]
        );
    }
}
