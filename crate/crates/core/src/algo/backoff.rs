//! Acknowledgement-based windowed backoff: BEB and QB, unbounded and capped.

use rand::Rng;

use crate::channel::{Decision, Round};
use crate::error::{Result, SimError};
use crate::rng::SimRng;
use crate::station::{Observation, Station};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BackoffPolicy {
    /// `2^k`
    Beb,
    /// `2^min(10, k)`
    BebCapped,
    /// `k^2`
    Qb,
    /// `min(k, 32)^2`
    QbCapped,
}

impl BackoffPolicy {
    /// Window length after the `k`-th consecutive failure.
    pub fn window_size(self, k: u32) -> Result<u64> {
        if k < 1 {
            return Err(SimError::InvalidParameter(
                "attempt count must be at least 1".into(),
            ));
        }
        Ok(match self {
            BackoffPolicy::Beb => 1u64.checked_shl(k).filter(|_| k < 64).unwrap_or(u64::MAX),
            BackoffPolicy::BebCapped => 1u64 << k.min(10),
            BackoffPolicy::Qb => (k as u64) * (k as u64),
            BackoffPolicy::QbCapped => (k.min(32) as u64).pow(2),
        })
    }
}

/// One backoff station. A fresh head packet goes out at the first
/// opportunity; after each failed attempt the station picks a round
/// uniformly from the next window, which starts right after the failure.
/// The engine resets the station after every own success; the RNG stream
/// survives resets.
pub struct Backoff {
    policy: BackoffPolicy,
    rng: SimRng,
    failures: u32,
    scheduled: Option<Round>,
}

impl Backoff {
    pub fn new(policy: BackoffPolicy, rng: SimRng) -> Self {
        Backoff {
            policy,
            rng,
            failures: 0,
            scheduled: None,
        }
    }

    pub fn scheduled(&self) -> Option<Round> {
        self.scheduled
    }

    pub fn failures(&self) -> u32 {
        self.failures
    }
}

impl Station for Backoff {
    fn observe(&mut self, obs: &Observation<'_>) -> Decision {
        let next = obs.round + 1;
        if obs.transmitted && !obs.own_success() {
            self.failures += 1;
            let window = self
                .policy
                .window_size(self.failures)
                .expect("failures >= 1");
            self.scheduled = Some(next + self.rng.gen_range(0..window));
        } else if self.scheduled.is_none() {
            self.scheduled = Some(next);
        }
        if self.scheduled == Some(next) {
            Decision::HEAD
        } else {
            Decision::Pause
        }
    }

    fn reset(&mut self) {
        self.failures = 0;
        self.scheduled = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::testing::{run_preloaded, run_script, Outcome};
    use crate::algo::Algorithm;
    use crate::channel::{Feedback, Packet};
    use crate::rng::substream;
    use std::collections::VecDeque;

    #[test]
    fn window_sizes() {
        assert_eq!(BackoffPolicy::Beb.window_size(3).unwrap(), 8);
        assert_eq!(BackoffPolicy::BebCapped.window_size(12).unwrap(), 1024);
        assert_eq!(BackoffPolicy::Qb.window_size(5).unwrap(), 25);
        assert_eq!(BackoffPolicy::QbCapped.window_size(40).unwrap(), 1024);
        assert_eq!(BackoffPolicy::Qb.window_size(1).unwrap(), 1);
        assert!(BackoffPolicy::Beb.window_size(0).is_err());
    }

    #[test]
    fn capped_windows_never_exceed_1024() {
        for k in 1..200 {
            assert!(BackoffPolicy::BebCapped.window_size(k).unwrap() <= 1024);
            assert!(BackoffPolicy::QbCapped.window_size(k).unwrap() <= 1024);
        }
    }

    #[test]
    fn lone_station_first_attempt() {
        let out = run_script(Algorithm::Beb, 2, false, &[vec![(1, 1)]], 3);
        assert_eq!(out[1], Outcome::Heard(1));
    }

    #[test]
    fn retry_lands_inside_window() {
        let q: VecDeque<Packet> = [Packet::new(0, 0, 0)].into();
        let mut s = Backoff::new(BackoffPolicy::Beb, substream(7, 1));
        for round in 0..2_000u64 {
            let fb = Feedback::Collision;
            let obs = Observation {
                round,
                feedback: Some(&fb),
                transmitted: s.scheduled == Some(round),
                injected: 0,
                queue: &q,
            };
            let failures_before = s.failures();
            s.observe(&obs);
            if s.failures() > failures_before {
                let w = BackoffPolicy::Beb.window_size(s.failures()).unwrap();
                let slot = s.scheduled().unwrap();
                assert!(slot > round && slot <= round + w);
            }
            if s.failures() >= 10 {
                break;
            }
        }
    }

    #[test]
    fn window_of_eight_is_uniform() {
        let mut rng = substream(11, 1);
        let mut counts = [0u32; 8];
        let draws = 100_000;
        for _ in 0..draws {
            let mut s = Backoff::new(BackoffPolicy::Beb, rng.clone());
            s.failures = 2; // the next failure opens a window of 8
            s.scheduled = Some(5);
            let q: VecDeque<Packet> = [Packet::new(0, 0, 0)].into();
            let fb = Feedback::Void;
            s.observe(&Observation {
                round: 5,
                feedback: Some(&fb),
                transmitted: true,
                injected: 0,
                queue: &q,
            });
            counts[(s.scheduled().unwrap() - 6) as usize] += 1;
            rng = s.rng;
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.125).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn simultaneous_pair_collides_then_separates() {
        let out = run_preloaded(Algorithm::Beb, 2, &[(0, 1), (1, 1)], 200);
        assert_eq!(out[0], Outcome::Collision);
        assert_eq!(
            out.iter()
                .filter(|o| matches!(o, Outcome::Heard(_)))
                .count(),
            2
        );
    }

    #[test]
    fn deterministic_schedule() {
        let a = run_preloaded(Algorithm::Qb, 3, &[(0, 2), (1, 2), (2, 2)], 300);
        let b = run_preloaded(Algorithm::Qb, 3, &[(0, 2), (1, 2), (2, 2)], 300);
        assert_eq!(a, b);
    }
}
