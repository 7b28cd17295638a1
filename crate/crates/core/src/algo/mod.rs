//! Station automata and the algorithm registry.

pub mod adhoc;
pub mod backoff;
pub mod token;

use std::fmt;
use std::str::FromStr;

pub use adhoc::{CountingBackoff, QuadrupleRound, QueueBackoff};
pub use backoff::{Backoff, BackoffPolicy};
pub use token::{MoveBigToFront, RoundRobin, SearchRoundRobin};

use crate::engine::Invariants;
use crate::error::ParseError;
use crate::rng::{station_stream, substream};
use crate::station::{Category, Station};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Rrw,
    OfRrw,
    Srr,
    OfSrr,
    Mbtf,
    CountingBackoff,
    QuadrupleRound,
    QueueBackoff,
    Beb,
    BebCapped,
    Qb,
    QbCapped,
}

impl Algorithm {
    pub const ALL: [Algorithm; 12] = [
        Algorithm::Rrw,
        Algorithm::OfRrw,
        Algorithm::Srr,
        Algorithm::OfSrr,
        Algorithm::Mbtf,
        Algorithm::CountingBackoff,
        Algorithm::QuadrupleRound,
        Algorithm::QueueBackoff,
        Algorithm::Beb,
        Algorithm::BebCapped,
        Algorithm::Qb,
        Algorithm::QbCapped,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rrw => "rrw",
            Algorithm::OfRrw => "of-rrw",
            Algorithm::Srr => "srr",
            Algorithm::OfSrr => "of-srr",
            Algorithm::Mbtf => "mbtf",
            Algorithm::CountingBackoff => "counting-backoff",
            Algorithm::QuadrupleRound => "quadruple-round",
            Algorithm::QueueBackoff => "queue-backoff",
            Algorithm::Beb => "beb",
            Algorithm::BebCapped => "beb-capped",
            Algorithm::Qb => "qb",
            Algorithm::QbCapped => "qb-capped",
        }
    }

    pub fn requires_cd(self) -> bool {
        matches!(
            self,
            Algorithm::Srr
                | Algorithm::OfSrr
                | Algorithm::CountingBackoff
                | Algorithm::QuadrupleRound
        )
    }

    pub fn category(self) -> Category {
        match self {
            Algorithm::Rrw
            | Algorithm::OfRrw
            | Algorithm::Srr
            | Algorithm::OfSrr
            | Algorithm::Mbtf
            | Algorithm::QuadrupleRound => Category::FullSensing,
            Algorithm::CountingBackoff | Algorithm::QueueBackoff => Category::ActivationBased,
            Algorithm::Beb | Algorithm::BebCapped | Algorithm::Qb | Algorithm::QbCapped => {
                Category::AcknowledgementBased
            }
        }
    }

    /// Structural properties the engine checks for this algorithm.
    pub fn invariants(self) -> Invariants {
        let mut inv = Invariants::default();
        match self {
            Algorithm::Rrw | Algorithm::OfRrw | Algorithm::Mbtf => {
                inv.collision_free = true;
                inv.replicated_state = true;
            }
            Algorithm::Srr | Algorithm::OfSrr | Algorithm::QuadrupleRound => {
                inv.replicated_state = true
            }
            Algorithm::CountingBackoff => inv.stack_counters = true,
            Algorithm::QueueBackoff => inv.queue_positions = true,
            _ => {}
        }
        inv
    }

    pub fn backoff_policy(self) -> Option<BackoffPolicy> {
        match self {
            Algorithm::Beb => Some(BackoffPolicy::Beb),
            Algorithm::BebCapped => Some(BackoffPolicy::BebCapped),
            Algorithm::Qb => Some(BackoffPolicy::Qb),
            Algorithm::QbCapped => Some(BackoffPolicy::QbCapped),
            _ => None,
        }
    }

    /// One automaton per station; randomized stations draw from their own
    /// substream of `seed`.
    pub fn stations(self, n: usize, seed: u64) -> Vec<Box<dyn Station>> {
        (0..n)
            .map(|id| -> Box<dyn Station> {
                match self {
                    Algorithm::Rrw => Box::new(RoundRobin::new(id, n, false)),
                    Algorithm::OfRrw => Box::new(RoundRobin::new(id, n, true)),
                    Algorithm::Srr => Box::new(SearchRoundRobin::new(id, n, false)),
                    Algorithm::OfSrr => Box::new(SearchRoundRobin::new(id, n, true)),
                    Algorithm::Mbtf => Box::new(MoveBigToFront::new(id, n)),
                    Algorithm::CountingBackoff => Box::new(CountingBackoff::default()),
                    Algorithm::QuadrupleRound => Box::new(QuadrupleRound::default()),
                    Algorithm::QueueBackoff => Box::new(QueueBackoff::default()),
                    _ => {
                        let policy = self
                            .backoff_policy()
                            .expect("remaining algorithms are backoff");
                        Box::new(Backoff::new(policy, substream(seed, station_stream(id))))
                    }
                }
            })
            .collect()
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ParseError::Algorithm(s.to_string()))
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::Algorithm;
    use crate::adversary::{Adversary, AdversaryView, InjectionPlan};
    use crate::channel::{ChannelEvent, StationId};
    use crate::engine::{ChannelConfig, Engine};
    use crate::error::Result;

    /// Ground-truth outcome of a round.
    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub enum Outcome {
        Silence,
        Collision,
        Heard(StationId),
    }

    struct Script(Vec<Vec<(StationId, u64)>>);

    impl Adversary for Script {
        fn plan(&mut self, view: &AdversaryView<'_>) -> Result<InjectionPlan> {
            Ok(InjectionPlan::from_counts(
                self.0.get(view.round as usize).cloned().unwrap_or_default(),
            ))
        }
    }

    fn drive(
        alg: Algorithm,
        n: usize,
        cd: bool,
        activation_bound: usize,
        script: Vec<Vec<(StationId, u64)>>,
        rounds: usize,
    ) -> Vec<Outcome> {
        let mut config = ChannelConfig::new(n, cd).unwrap();
        config.activation_bound = activation_bound;
        let mut engine = Engine::new(
            config,
            alg.category(),
            alg.stations(n, 42),
            Box::new(Script(script)),
        )
        .with_invariants(alg.invariants());
        (0..rounds)
            .map(|_| match engine.run_round().unwrap().event {
                ChannelEvent::Silence => Outcome::Silence,
                ChannelEvent::Collision => Outcome::Collision,
                ChannelEvent::Heard(m) => Outcome::Heard(m.sender),
            })
            .collect()
    }

    /// Outcomes of rounds `0..rounds` under a per-round injection script.
    pub fn run_script(
        alg: Algorithm,
        n: usize,
        cd: bool,
        script: &[Vec<(StationId, u64)>],
        rounds: usize,
    ) -> Vec<Outcome> {
        drive(alg, n, cd, 1, script.to_vec(), rounds)
    }

    /// Injects everything at round 0 (ignoring the activation bound) and
    /// returns the outcomes of rounds `1..=rounds`.
    pub fn run_preloaded(
        alg: Algorithm,
        n: usize,
        load: &[(StationId, u64)],
        rounds: usize,
    ) -> Vec<Outcome> {
        let mut out = drive(alg, n, true, n, vec![load.to_vec()], rounds + 1);
        out.remove(0);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for alg in Algorithm::ALL {
            assert_eq!(alg.name().parse::<Algorithm>().unwrap(), alg);
        }
        assert!("aloha".parse::<Algorithm>().is_err());
    }

    #[test]
    fn collision_detection_requirements() {
        let needs: Vec<_> = Algorithm::ALL
            .into_iter()
            .filter(|a| a.requires_cd())
            .map(|a| a.name())
            .collect();
        assert_eq!(
            needs,
            ["srr", "of-srr", "counting-backoff", "quadruple-round"]
        );
    }
}
