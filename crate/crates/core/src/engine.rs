//! The synchronous round loop.
//!
//! Per round, in order:
//! 1. stations transmit according to decisions committed last round;
//! 2. the event is computed and projected to feedback; a heard packet is
//!    dequeued and marked delivered;
//! 3. the adversary injects (at most `k` passive stations activated);
//! 4. stations observe the round and commit their next decision.
//!
//! Activation-based stations with an empty queue after step 3 are not
//! invoked and are held in their initial state.

use std::collections::VecDeque;

use crate::adversary::{Adversary, AdversaryView};
use crate::channel::{
    compute_feedback, project_feedback, ChannelEvent, Decision, Message, Packet, PacketId, Round,
    StationId,
};
use crate::error::{Result, SimError};
use crate::station::{Category, Observation, Probe, Station};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChannelConfig {
    pub n: usize,
    pub collision_detection: bool,
    /// At most this many passive stations may be activated per round.
    pub activation_bound: usize,
}

impl ChannelConfig {
    pub fn new(n: usize, collision_detection: bool) -> Result<Self> {
        if n == 0 {
            return Err(SimError::InvalidParameter(
                "at least one station is required".into(),
            ));
        }
        Ok(ChannelConfig {
            n,
            collision_detection,
            activation_bound: 1,
        })
    }
}

/// Structural properties checked after every round when enabled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Invariants {
    pub collision_free: bool,
    pub replicated_state: bool,
    pub stack_counters: bool,
    pub queue_positions: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: Round,
    pub transmitters: usize,
    pub event: ChannelEvent,
    pub delivered: Option<Packet>,
    pub injections: Vec<(StationId, PacketId)>,
    pub total_queued: u64,
}

pub struct Engine {
    config: ChannelConfig,
    category: Category,
    invariants: Invariants,
    checks: bool,
    stations: Vec<Box<dyn Station>>,
    decisions: Vec<Decision>,
    listening: Vec<bool>,
    queues: Vec<VecDeque<Packet>>,
    queue_lens: Vec<usize>,
    injected_counts: Vec<usize>,
    adversary: Box<dyn Adversary>,
    round: Round,
    next_packet: PacketId,
    injected: u64,
    delivered: u64,
    queued: u64,
    outbox: Vec<Message>,
}

impl Engine {
    pub fn new(
        config: ChannelConfig,
        category: Category,
        stations: Vec<Box<dyn Station>>,
        adversary: Box<dyn Adversary>,
    ) -> Self {
        assert_eq!(stations.len(), config.n, "one automaton per station");
        let n = config.n;
        Engine {
            config,
            category,
            invariants: Invariants::default(),
            checks: true,
            stations,
            decisions: vec![Decision::Pause; n],
            listening: vec![false; n],
            queues: vec![VecDeque::new(); n],
            queue_lens: vec![0; n],
            injected_counts: vec![0; n],
            adversary,
            round: 0,
            next_packet: 0,
            injected: 0,
            delivered: 0,
            queued: 0,
            outbox: Vec::new(),
        }
    }

    pub fn with_invariants(mut self, invariants: Invariants) -> Self {
        self.invariants = invariants;
        self
    }

    /// Enables or disables the per-round structural checks.
    pub fn with_checks(mut self, checks: bool) -> Self {
        self.checks = checks;
        self
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    /// Index of the next round to execute.
    pub fn round(&self) -> Round {
        self.round
    }

    pub fn queue(&self, station: StationId) -> &VecDeque<Packet> {
        &self.queues[station]
    }

    pub fn total_queued(&self) -> u64 {
        self.queued
    }

    pub fn injected(&self) -> u64 {
        self.injected
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    /// Age, at the last executed round, of the oldest undelivered packet.
    pub fn max_pending_age(&self) -> u64 {
        let last = self.round.saturating_sub(1);
        self.queues
            .iter()
            .filter_map(|q| q.front())
            .map(|p| last - p.injected_round)
            .max()
            .unwrap_or(0)
    }

    pub fn station(&self, id: StationId) -> &dyn Station {
        self.stations[id].as_ref()
    }

    pub fn run_round(&mut self) -> Result<RoundRecord> {
        let round = self.round;

        // 1. transmissions committed last round
        self.outbox.clear();
        for (s, decision) in self.decisions.iter().enumerate() {
            if let Decision::Transmit { packet, control } = *decision {
                let payload = if packet {
                    let head = self.queues[s].front().copied().ok_or_else(|| {
                        SimError::ProtocolViolation {
                            station: s,
                            round,
                            reason: "transmitted a packet with an empty queue".into(),
                        }
                    })?;
                    Some(head)
                } else {
                    None
                };
                self.outbox.push(Message {
                    sender: s,
                    payload,
                    control,
                });
            }
        }
        let transmitters = self.outbox.len();

        // 2. feedback and delivery
        let event = compute_feedback(&self.outbox);
        let mut delivered = None;
        if let ChannelEvent::Heard(Message {
            sender,
            payload: Some(_),
            ..
        }) = event
        {
            let mut packet = self.queues[sender]
                .pop_front()
                .expect("payload came from this queue");
            packet.delivered_round = Some(round);
            self.queue_lens[sender] -= 1;
            self.delivered += 1;
            self.queued -= 1;
            delivered = Some(packet);
        }
        let feedback = project_feedback(&event, self.config.collision_detection);

        // 3. injections
        let view = AdversaryView {
            round,
            event: &event,
            queue_lens: &self.queue_lens,
        };
        let plan = self.adversary.plan(&view)?;
        let activated = plan.activations(&self.queue_lens);
        if activated > self.config.activation_bound {
            return Err(SimError::ActivationBoundViolated {
                round,
                activated,
                bound: self.config.activation_bound,
            });
        }
        let mut injections = Vec::new();
        for &(s, count) in plan.entries() {
            if s >= self.config.n {
                return Err(SimError::InvalidParameter(format!(
                    "injection into unknown station {s}"
                )));
            }
            for _ in 0..count {
                let id = self.next_packet;
                self.next_packet += 1;
                self.queues[s].push_back(Packet::new(id, s, round));
                injections.push((s, id));
            }
            self.queue_lens[s] += count as usize;
            self.injected_counts[s] += count as usize;
            self.injected += count;
            self.queued += count;
        }

        // 4. local computation
        let fb = (round > 0).then_some(&feedback);
        let full_sensing = self.category == Category::FullSensing;
        for s in 0..self.config.n {
            let transmitted = self.decisions[s].transmits();
            if !full_sensing && self.queues[s].is_empty() {
                if self.listening[s] {
                    self.stations[s].reset();
                    self.listening[s] = false;
                }
                self.decisions[s] = Decision::Pause;
                continue;
            }
            let obs = Observation {
                round,
                feedback: fb,
                transmitted,
                injected: self.injected_counts[s],
                queue: &self.queues[s],
            };
            if self.category == Category::AcknowledgementBased && obs.own_success() {
                self.stations[s].reset();
            }
            self.decisions[s] = self.stations[s].observe(&obs);
            self.listening[s] = true;
        }
        for &(s, _) in plan.entries() {
            self.injected_counts[s] = 0;
        }

        if self.checks {
            self.check_round(round, &event, delivered.is_some())?;
        }
        self.round += 1;
        Ok(RoundRecord {
            round,
            transmitters,
            event,
            delivered,
            injections,
            total_queued: self.queued,
        })
    }

    fn check_round(&self, round: Round, event: &ChannelEvent, delivered: bool) -> Result<()> {
        let fail = |reason: String| Err(SimError::InvariantViolated { round, reason });
        let queued: u64 = self.queues.iter().map(|q| q.len() as u64).sum();
        if queued != self.queued || self.injected != self.delivered + queued {
            return fail(format!(
                "conservation: injected {} delivered {} queued {}",
                self.injected, self.delivered, queued
            ));
        }
        if delivered
            != matches!(
                event,
                ChannelEvent::Heard(Message {
                    payload: Some(_),
                    ..
                })
            )
        {
            return fail("delivery does not match the channel event".into());
        }
        if self.invariants.collision_free && *event == ChannelEvent::Collision {
            return fail("collision in a collision-free algorithm".into());
        }
        if self.invariants.replicated_state {
            let mut digests = self.stations.iter().map(|s| s.probe());
            if let Some(first) = digests.next() {
                if let Some(other) = digests.find(|d| *d != first) {
                    return fail(format!("replicated state diverged: {first:?} vs {other:?}"));
                }
            }
        }
        if self.invariants.stack_counters {
            let mut counters = self.placed(|p| match p {
                Probe::StackCounter(c) => c,
                _ => None,
            });
            counters.sort_unstable();
            let base = counters.first().copied().unwrap_or(0);
            let contiguous = counters
                .iter()
                .enumerate()
                .all(|(i, &c)| c == base + i as u64);
            if base > 1 || !contiguous {
                return fail(format!(
                    "stack counters {counters:?} are not contiguous from 0 or 1"
                ));
            }
        }
        if self.invariants.queue_positions {
            let mut positions = self.placed(|p| match p {
                Probe::QueuePosition(q) => q,
                _ => None,
            });
            positions.sort_unstable();
            if positions.iter().enumerate().any(|(i, &p)| p != i as u64) {
                return fail(format!("queue positions {positions:?} are not 0..m"));
            }
        }
        Ok(())
    }

    fn placed(&self, extract: impl Fn(Probe) -> Option<u64>) -> Vec<u64> {
        self.stations
            .iter()
            .zip(&self.queues)
            .filter(|(_, q)| !q.is_empty())
            .filter_map(|(s, _)| extract(s.probe()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{InjectionPlan, Silent};
    use crate::channel::Feedback;

    /// Transmits its head whenever its queue is nonempty.
    struct Greedy;

    impl Station for Greedy {
        fn observe(&mut self, obs: &Observation<'_>) -> Decision {
            if obs.queue.is_empty() {
                Decision::Pause
            } else {
                Decision::HEAD
            }
        }
        fn reset(&mut self) {}
    }

    /// Injects a fixed plan per round.
    struct Script(Vec<Vec<(StationId, u64)>>);

    impl Adversary for Script {
        fn plan(&mut self, view: &AdversaryView<'_>) -> Result<InjectionPlan> {
            let entries = self.0.get(view.round as usize).cloned().unwrap_or_default();
            Ok(InjectionPlan::from_counts(entries))
        }
    }

    fn engine(n: usize, script: Vec<Vec<(StationId, u64)>>) -> Engine {
        let config = ChannelConfig::new(n, true).unwrap();
        let stations = (0..n)
            .map(|_| Box::new(Greedy) as Box<dyn Station>)
            .collect();
        Engine::new(
            config,
            Category::FullSensing,
            stations,
            Box::new(Script(script)),
        )
    }

    #[test]
    fn single_station_delivers_next_round() {
        let mut e = engine(1, vec![vec![(0, 1)]]);
        let r0 = e.run_round().unwrap();
        assert_eq!(r0.event, ChannelEvent::Silence);
        assert_eq!(r0.total_queued, 1);
        let r1 = e.run_round().unwrap();
        let p = r1.delivered.unwrap();
        assert_eq!(p.delay(), Some(1));
        assert_eq!(r1.total_queued, 0);
    }

    #[test]
    fn injection_follows_transmission() {
        let mut e = engine(3, vec![vec![], vec![(2, 1)]]);
        e.run_round().unwrap();
        let r1 = e.run_round().unwrap();
        assert_eq!(r1.event, ChannelEvent::Silence);
        assert_eq!(r1.injections, vec![(2, 0)]);
        let r2 = e.run_round().unwrap();
        assert_eq!(r2.delivered.map(|p| p.station), Some(2));
    }

    #[test]
    fn forced_collision_delivers_nothing() {
        let mut e = engine(2, vec![vec![(0, 1)], vec![(1, 1)]]);
        e.run_round().unwrap();
        e.run_round().unwrap(); // station 0 heard alone
        let mut e = engine(2, vec![vec![(0, 2)], vec![(1, 1)]]);
        e.run_round().unwrap();
        e.run_round().unwrap();
        let r = e.run_round().unwrap();
        assert_eq!(r.event, ChannelEvent::Collision);
        assert_eq!(r.transmitters, 2);
        assert!(r.delivered.is_none());
    }

    #[test]
    fn activation_bound_is_enforced() {
        let mut e = engine(3, vec![vec![(0, 1), (1, 1)]]);
        assert_eq!(
            e.run_round(),
            Err(SimError::ActivationBoundViolated {
                round: 0,
                activated: 2,
                bound: 1
            })
        );
    }

    #[test]
    fn silent_run_is_idle() {
        let config = ChannelConfig::new(4, false).unwrap();
        let stations = (0..4)
            .map(|_| Box::new(Greedy) as Box<dyn Station>)
            .collect();
        let mut e = Engine::new(config, Category::FullSensing, stations, Box::new(Silent));
        for _ in 0..100 {
            let r = e.run_round().unwrap();
            assert_eq!(r.event, ChannelEvent::Silence);
            assert!(r.delivered.is_none());
        }
        assert_eq!(e.total_queued(), 0);
    }

    /// Records what it was shown so the test can compare feedback values.
    type Heard = Vec<(Round, Option<Feedback>)>;
    struct Recorder(std::sync::Arc<std::sync::Mutex<Heard>>);

    impl Station for Recorder {
        fn observe(&mut self, obs: &Observation<'_>) -> Decision {
            self.0
                .lock()
                .unwrap()
                .push((obs.round, obs.feedback.copied()));
            if obs.queue.is_empty() {
                Decision::Pause
            } else {
                Decision::HEAD
            }
        }
        fn reset(&mut self) {}
    }

    #[test]
    fn all_stations_see_identical_feedback() {
        let log = std::sync::Arc::new(std::sync::Mutex::new(Vec::new()));
        let config = ChannelConfig::new(3, false).unwrap();
        let stations = (0..3)
            .map(|_| Box::new(Recorder(log.clone())) as Box<dyn Station>)
            .collect();
        let script = vec![vec![(0, 2)], vec![(1, 1)], vec![], vec![(2, 1)]];
        let mut e = Engine::new(
            config,
            Category::FullSensing,
            stations,
            Box::new(Script(script)),
        );
        for _ in 0..8 {
            e.run_round().unwrap();
        }
        let log = log.lock().unwrap();
        for round in 0..8 {
            let seen: Vec<_> = log
                .iter()
                .filter(|(r, _)| *r == round)
                .map(|(_, f)| *f)
                .collect();
            assert_eq!(seen.len(), 3);
            assert!(seen.windows(2).all(|w| w[0] == w[1]));
        }
    }
}
