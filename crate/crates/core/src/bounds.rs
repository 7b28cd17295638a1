//! Closed-form worst-case queue and latency bounds, and a verifier that
//! runs executions against them.

use std::fmt;
use std::str::FromStr;

use crate::adversary::{AdversaryType, StrategyKind};
use crate::algo::Algorithm;
use crate::channel::Round;
use crate::error::{ParseError, Result, SimError};
use crate::execution::{run_with_stations, AdversarySpec, RunSpec, StopRule};
use crate::fixed::Fixed;
use crate::station::Station;

/// Constant `c` in the `beta + c` queue bound of Quadruple-Round at
/// `rho <= 3/8`.
pub const QUADRUPLE_38_QUEUE_CONSTANT: f64 = 8.0;
pub const DEFAULT_HORIZON: u64 = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Theorem {
    RrwIndividual,
    SrrIndividual,
    Quadruple,
    QueueBackoff,
    RrwGeneral,
    OfRrwGeneral,
    OfSrrGeneral,
    SrrGeneral,
    CountingBackoff,
    Quadruple38,
}

impl Theorem {
    pub const ALL: [Theorem; 10] = [
        Theorem::RrwIndividual,
        Theorem::SrrIndividual,
        Theorem::Quadruple,
        Theorem::QueueBackoff,
        Theorem::RrwGeneral,
        Theorem::OfRrwGeneral,
        Theorem::OfSrrGeneral,
        Theorem::SrrGeneral,
        Theorem::CountingBackoff,
        Theorem::Quadruple38,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::RrwIndividual => "rrw-individual",
            Theorem::SrrIndividual => "srr-individual",
            Theorem::Quadruple => "quadruple",
            Theorem::QueueBackoff => "queue-backoff",
            Theorem::RrwGeneral => "rrw-general",
            Theorem::OfRrwGeneral => "of-rrw-general",
            Theorem::OfSrrGeneral => "of-srr-general",
            Theorem::SrrGeneral => "srr-general",
            Theorem::CountingBackoff => "counting-backoff",
            Theorem::Quadruple38 => "quadruple-38",
        }
    }

    /// The algorithm the bound is about.
    pub fn algorithm(self) -> Algorithm {
        match self {
            Theorem::RrwIndividual | Theorem::RrwGeneral => Algorithm::Rrw,
            Theorem::SrrIndividual | Theorem::SrrGeneral => Algorithm::Srr,
            Theorem::Quadruple | Theorem::Quadruple38 => Algorithm::QuadrupleRound,
            Theorem::QueueBackoff => Algorithm::QueueBackoff,
            Theorem::OfRrwGeneral => Algorithm::OfRrw,
            Theorem::OfSrrGeneral => Algorithm::OfSrr,
            Theorem::CountingBackoff => Algorithm::CountingBackoff,
        }
    }

    /// Whether the bound assumes per-station rates `rho_i`.
    pub fn individual_rates(self) -> bool {
        matches!(self, Theorem::RrwIndividual | Theorem::SrrIndividual)
    }

    /// The scripted worst-case pattern run against this bound by default.
    pub fn default_strategy(self) -> StrategyKind {
        match self {
            Theorem::RrwIndividual | Theorem::RrwGeneral | Theorem::OfRrwGeneral => {
                StrategyKind::RrwSaturator
            }
            Theorem::SrrIndividual | Theorem::SrrGeneral | Theorem::OfSrrGeneral => {
                StrategyKind::SrrSaturator
            }
            Theorem::Quadruple | Theorem::Quadruple38 => StrategyKind::QuadrupleSaturator,
            Theorem::QueueBackoff => StrategyKind::QueueBackoffDelayer,
            Theorem::CountingBackoff => StrategyKind::CountingStarver,
        }
    }

    /// Exact applicability test on the decimal rate.
    fn applies(self, rho: Fixed) -> std::result::Result<(), &'static str> {
        let r = rho.micros() as u128;
        let one = crate::fixed::SCALE as u128;
        let ok = match self {
            Theorem::Quadruple => 7 * r < 3 * one,
            Theorem::CountingBackoff => 3 * r < one,
            Theorem::Quadruple38 => 8 * r <= 3 * one,
            _ => r < one,
        };
        if ok {
            Ok(())
        } else {
            Err(match self {
                Theorem::Quadruple => "requires rho < 3/7",
                Theorem::CountingBackoff => "requires rho < 1/3",
                Theorem::Quadruple38 => "requires rho <= 3/8",
                _ => "requires rho < 1",
            })
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| ParseError::Theorem(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    /// `None` where only a latency bound is known.
    pub queue: Option<f64>,
    pub latency: f64,
}

pub fn bound_formula(theorem: Theorem, n: usize, rho: Fixed, beta: Fixed) -> Result<Bounds> {
    theorem
        .applies(rho)
        .map_err(|reason| SimError::OutOfRange {
            theorem: theorem.to_string(),
            reason: reason.into(),
        })?;
    let (n, r, b) = (n as f64, rho.to_f64(), beta.to_f64());
    let (queue, latency) = match theorem {
        Theorem::RrwIndividual => (Some(r / (1.0 - r) * n + b), (2.0 - r) / (1.0 - r) * n + b),
        Theorem::SrrIndividual => (
            Some(2.0 * r / (1.0 - r) * n + b),
            (3.0 - r) / (1.0 - r) * n + b,
        ),
        Theorem::Quadruple => {
            let d = 3.0 - 7.0 * r;
            (
                Some(r / d * n + b),
                7.0 * r / (d * d) * n + (n + 7.0 * b) / d,
            )
        }
        Theorem::QueueBackoff => (
            Some(r / (1.0 - r) * n + b),
            r / ((1.0 - r) * (1.0 - r)) * n + b / (1.0 - r),
        ),
        Theorem::RrwGeneral => (
            Some(2.0 * r / (1.0 - r) * n + b),
            (2.0 - r) / ((1.0 - r) * (1.0 - r)) * n + b / (1.0 - r),
        ),
        Theorem::OfRrwGeneral => (
            Some(2.0 * r / (1.0 - r) * n + b),
            2.0 / (1.0 - r) * n + b * (1.0 + r),
        ),
        Theorem::OfSrrGeneral => (
            Some(4.0 * r / (1.0 - r) * n + b),
            4.0 / (1.0 - r) * n + b * (1.0 + r),
        ),
        Theorem::SrrGeneral => (
            Some(4.0 * r / (1.0 - r) * n + b),
            (4.0 - 2.0 * r) / ((1.0 - r) * (1.0 - r)) * n + b / (1.0 - r),
        ),
        Theorem::CountingBackoff => (None, (3.0 * b - 3.0) / (1.0 - 3.0 * r)),
        Theorem::Quadruple38 => (Some(b + QUADRUPLE_38_QUEUE_CONSTANT), 2.0 * b + 4.0),
    };
    Ok(Bounds { queue, latency })
}

/// Builds the automata for a run; lets tests substitute faulty stations.
pub type StationFactory<'a> = &'a (dyn Fn(usize, u64) -> Vec<Box<dyn Station>> + Sync);

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyRequest {
    pub theorem: Theorem,
    pub algorithm: Algorithm,
    pub n: usize,
    pub adversary_type: AdversaryType,
    pub seeds: Vec<u64>,
    /// Scripted pattern; `None` selects the theorem's default.
    pub strategy: Option<StrategyKind>,
    pub horizon: u64,
}

impl VerifyRequest {
    pub fn new(theorem: Theorem, n: usize, adversary_type: AdversaryType, seeds: Vec<u64>) -> Self {
        VerifyRequest {
            theorem,
            algorithm: theorem.algorithm(),
            n,
            adversary_type,
            seeds,
            strategy: None,
            horizon: DEFAULT_HORIZON,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub seed: u64,
    pub adversary: String,
    pub max_queue: u64,
    pub max_queue_round: Round,
    /// Largest delay, counting the age of packets still queued at the end.
    pub max_delay: u64,
    pub max_delay_round: Round,
    pub queue_ok: bool,
    pub latency_ok: bool,
}

impl Measurement {
    pub fn passed(&self) -> bool {
        self.queue_ok && self.latency_ok
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub theorem: Theorem,
    pub bounds: Bounds,
    pub measurements: Vec<Measurement>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.measurements.iter().all(Measurement::passed)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Measurement> {
        self.measurements.iter().filter(|m| !m.passed())
    }

    pub fn max_queue(&self) -> u64 {
        self.measurements
            .iter()
            .map(|m| m.max_queue)
            .max()
            .unwrap_or(0)
    }

    pub fn max_delay(&self) -> u64 {
        self.measurements
            .iter()
            .map(|m| m.max_delay)
            .max()
            .unwrap_or(0)
    }
}

pub fn verify_bounds(request: &VerifyRequest) -> Result<VerifyReport> {
    let alg = request.algorithm;
    verify_bounds_with(request, &move |n, seed| alg.stations(n, seed))
}

/// Runs the scripted strategy and the randomized adversary for every seed
/// and compares the measured maxima with the theorem's bounds.
pub fn verify_bounds_with(
    request: &VerifyRequest,
    stations: StationFactory<'_>,
) -> Result<VerifyReport> {
    let theorem = request.theorem;
    if request.algorithm != theorem.algorithm() {
        return Err(SimError::IncompatibleAlgorithm {
            algorithm: request.algorithm.to_string(),
            reason: format!("{theorem} bounds {}", theorem.algorithm()),
        });
    }
    let ty = request.adversary_type;
    let bounds = bound_formula(theorem, request.n, ty.rho, ty.beta)?;
    let scripted = AdversarySpec::Strategy(
        request
            .strategy
            .clone()
            .unwrap_or_else(|| theorem.default_strategy()),
    );
    let randomized = if theorem.individual_rates() {
        AdversarySpec::RandomizedIndividual(None)
    } else {
        AdversarySpec::Randomized
    };

    let mut measurements = Vec::new();
    for &seed in &request.seeds {
        for adversary in [&scripted, &randomized] {
            let mut spec = RunSpec::new(request.algorithm, request.n, ty, adversary.clone());
            spec.stop = StopRule::FixedHorizon(request.horizon);
            spec.seed = seed;
            let report = run_with_stations(&spec, stations(request.n, seed))?;
            let s = &report.summary;
            let (max_delay, max_delay_round) = if report.max_pending_age > s.max_delay {
                (report.max_pending_age, request.horizon.saturating_sub(1))
            } else {
                (s.max_delay, s.max_delay_round)
            };
            measurements.push(Measurement {
                seed,
                adversary: adversary.to_string(),
                max_queue: s.max_queue,
                max_queue_round: s.max_queue_round,
                max_delay,
                max_delay_round,
                queue_ok: bounds.queue.is_none_or(|q| s.max_queue as f64 <= q),
                latency_ok: max_delay as f64 <= bounds.latency,
            });
        }
    }
    Ok(VerifyReport {
        theorem,
        bounds,
        measurements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Fixed {
        s.parse().unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        ((a - b) / b).abs() < 1e-9
    }

    #[test]
    fn formula_examples() {
        let b = bound_formula(Theorem::RrwIndividual, 10, f("0.5"), f("10")).unwrap();
        assert!(close(b.queue.unwrap(), 20.0) && close(b.latency, 40.0));
        let b = bound_formula(Theorem::QueueBackoff, 10, f("0.5"), f("10")).unwrap();
        assert!(close(b.queue.unwrap(), 20.0) && close(b.latency, 40.0));
        let b = bound_formula(Theorem::Quadruple, 9, f("0.3"), f("10")).unwrap();
        assert!(close(b.queue.unwrap(), 13.0));
        assert!(close(b.latency, 7.0 * 0.3 / 0.81 * 9.0 + 79.0 / 0.9));
        assert!((b.latency - 111.11).abs() < 0.01);
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(
            bound_formula(Theorem::Quadruple, 10, f("0.5"), f("10")),
            Err(SimError::OutOfRange { .. })
        ));
        // boundaries are exact
        assert!(bound_formula(Theorem::Quadruple38, 10, f("0.375"), f("10")).is_ok());
        assert!(bound_formula(Theorem::Quadruple38, 10, f("0.375001"), f("10")).is_err());
        assert!(bound_formula(Theorem::CountingBackoff, 10, f("0.333333"), f("10")).is_ok());
        assert!(bound_formula(Theorem::RrwGeneral, 10, f("1"), f("10")).is_err());
    }

    #[test]
    fn remaining_formulas() {
        let (r, n, b) = (0.6, 25.0, 10.0);
        let get = |t| bound_formula(t, 25, f("0.6"), f("10")).unwrap();
        assert!(close(
            get(Theorem::SrrIndividual).latency,
            (3.0 - r) / (1.0 - r) * n + b
        ));
        assert!(close(
            get(Theorem::OfRrwGeneral).latency,
            2.0 / (1.0 - r) * n + b * (1.0 + r)
        ));
        assert!(close(
            get(Theorem::OfSrrGeneral).queue.unwrap(),
            4.0 * r / (1.0 - r) * n + b
        ));
        assert!(close(
            get(Theorem::SrrGeneral).latency,
            (4.0 - 2.0 * r) / 0.16 * n + b / 0.4
        ));
        assert!(close(
            get(Theorem::RrwGeneral).latency,
            (2.0 - r) / 0.16 * n + b / 0.4
        ));
        let c = bound_formula(Theorem::CountingBackoff, 4, f("0.2"), f("10")).unwrap();
        assert_eq!(c.queue, None);
        assert!(close(c.latency, 27.0 / 0.4));
        let q = bound_formula(Theorem::Quadruple38, 4, f("0.3"), f("10")).unwrap();
        assert_eq!((q.queue, q.latency), (Some(18.0), 24.0));
    }

    #[test]
    fn names_and_pairs() {
        for t in Theorem::ALL {
            assert_eq!(t.name().parse::<Theorem>().unwrap(), t);
        }
        let ty = AdversaryType::new(f("0.5"), f("10")).unwrap();
        let mut req = VerifyRequest::new(Theorem::RrwIndividual, 10, ty, vec![1]);
        req.algorithm = Algorithm::Srr;
        assert!(matches!(
            verify_bounds(&req),
            Err(SimError::IncompatibleAlgorithm { .. })
        ));
    }

    #[test]
    fn rrw_individual_passes() {
        let ty = AdversaryType::new(f("0.5"), f("10")).unwrap();
        let mut req = VerifyRequest::new(Theorem::RrwIndividual, 10, ty, vec![1, 2]);
        req.horizon = 5_000;
        let report = verify_bounds(&req).unwrap();
        assert_eq!(report.measurements.len(), 4);
        assert!(report.passed(), "{report:?}");
    }
}
