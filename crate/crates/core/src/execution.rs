//! One complete execution: build the channel, stations and adversary from a
//! `RunSpec`, run until the stop rule fires, and summarise.

use std::fmt;
use std::str::FromStr;

use crate::adversary::{
    parse_trace, Adversary, AdversaryType, IndividualRates, InjectionTrace, RandomizedAdversary,
    RandomizedIndividualAdversary, Silent, Strategy, StrategyKind, TraceAdversary,
};
use crate::algo::Algorithm;
use crate::channel::{PacketId, Round};
use crate::engine::{ChannelConfig, Engine, RoundRecord};
use crate::error::{Result, SimError};
use crate::metrics::{
    StageLedger, Verdict, DEFAULT_MAX_ROUNDS, DEFAULT_MAX_STAGES, DEFAULT_STAGE_SIZE,
};
use crate::rng::{substream, ADVERSARY_STREAM};
use crate::station::Station;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdversarySpec {
    Silent,
    Randomized,
    /// Randomized with per-station rates; `None` means `rho / n` each.
    RandomizedIndividual(Option<IndividualRates>),
    Strategy(StrategyKind),
    Trace(InjectionTrace),
}

impl AdversarySpec {
    /// Resolves a name as accepted on the command line; `trace:<path>`
    /// reads and parses the file.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "silent" => Ok(AdversarySpec::Silent),
            "randomized" => Ok(AdversarySpec::Randomized),
            "randomized-individual" => Ok(AdversarySpec::RandomizedIndividual(None)),
            _ => match name.parse::<StrategyKind>()? {
                StrategyKind::Trace(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        SimError::InvalidParameter(format!(
                            "cannot read trace {}: {e}",
                            path.display()
                        ))
                    })?;
                    Ok(AdversarySpec::Trace(parse_trace(&text)?))
                }
                kind => Ok(AdversarySpec::Strategy(kind)),
            },
        }
    }

    fn build(&self, ty: AdversaryType, n: usize, seed: u64) -> Result<Box<dyn Adversary>> {
        let rng = substream(seed, ADVERSARY_STREAM);
        Ok(match self {
            AdversarySpec::Silent => Box::new(Silent),
            AdversarySpec::Randomized => Box::new(RandomizedAdversary::new(ty, rng)),
            AdversarySpec::RandomizedIndividual(rates) => {
                let rates = rates
                    .clone()
                    .unwrap_or_else(|| IndividualRates::uniform(ty.rho, n));
                if rates.rates().len() != n {
                    return Err(SimError::InvalidParameter(format!(
                        "{} individual rates for {n} stations",
                        rates.rates().len()
                    )));
                }
                Box::new(RandomizedIndividualAdversary::new(ty, rates, rng)?)
            }
            AdversarySpec::Strategy(kind) => Box::new(Strategy::new(kind, ty, n)),
            AdversarySpec::Trace(trace) => {
                if let Some(s) = trace.max_station().filter(|&s| s >= n) {
                    return Err(SimError::InvalidParameter(format!(
                        "trace names station {s} but n = {n}"
                    )));
                }
                Box::new(TraceAdversary::new(trace.clone()))
            }
        })
    }
}

/// Displays the command-line name; traces display as `trace`.
impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversarySpec::Silent => f.write_str("silent"),
            AdversarySpec::Randomized => f.write_str("randomized"),
            AdversarySpec::RandomizedIndividual(_) => f.write_str("randomized-individual"),
            AdversarySpec::Strategy(kind) => kind.fmt(f),
            AdversarySpec::Trace(_) => f.write_str("trace"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    FixedHorizon(u64),
    /// Run until the stage protocol stabilizes, or declare the run unstable
    /// once either cap is reached.
    StageVerdict {
        max_stages: usize,
        max_rounds: u64,
    },
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::StageVerdict {
            max_stages: DEFAULT_MAX_STAGES,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub n: usize,
    pub adversary_type: AdversaryType,
    pub collision_detection: bool,
    pub adversary: AdversarySpec,
    pub stop: StopRule,
    pub stage_size: u64,
    pub seed: u64,
    /// Retain every round record in the report.
    pub keep_log: bool,
    /// Per-round structural checks.
    pub checks: bool,
    /// Packet whose delivery round is reported.
    pub track: Option<PacketId>,
}

impl RunSpec {
    pub fn new(
        algorithm: Algorithm,
        n: usize,
        adversary_type: AdversaryType,
        adversary: AdversarySpec,
    ) -> Self {
        RunSpec {
            algorithm,
            n,
            adversary_type,
            collision_detection: algorithm.requires_cd(),
            adversary,
            stop: StopRule::default(),
            stage_size: DEFAULT_STAGE_SIZE,
            seed: 0,
            keep_log: false,
            checks: true,
            track: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(SimError::InvalidParameter(
                "at least one station is required".into(),
            ));
        }
        if self.stage_size == 0 {
            return Err(SimError::InvalidParameter(
                "stage size must be positive".into(),
            ));
        }
        if self.algorithm.requires_cd() && !self.collision_detection {
            return Err(SimError::IncompatibleAlgorithm {
                algorithm: self.algorithm.to_string(),
                reason: "requires a channel with collision detection".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionReport {
    pub summary: crate::metrics::MetricsSummary,
    pub injected: u64,
    pub delivered: u64,
    pub final_queue: u64,
    /// Age of the oldest packet still queued when the run stopped.
    pub max_pending_age: u64,
    /// Delivery round of the tracked packet, if it was delivered.
    pub tracked_delivery: Option<Round>,
    pub log: Option<Vec<RoundRecord>>,
}

impl ExecutionReport {
    pub fn verdict(&self) -> Verdict {
        self.summary.verdict
    }
}

pub fn run_execution(spec: &RunSpec) -> Result<ExecutionReport> {
    spec.validate()?;
    run_with_stations(spec, spec.algorithm.stations(spec.n, spec.seed))
}

/// Runs `spec` with caller-supplied automata in place of the algorithm's
/// own (category and checks still follow `spec.algorithm`).
pub fn run_with_stations(
    spec: &RunSpec,
    stations: Vec<Box<dyn Station>>,
) -> Result<ExecutionReport> {
    spec.validate()?;
    let config = ChannelConfig::new(spec.n, spec.collision_detection)?;
    let adversary = spec
        .adversary
        .build(spec.adversary_type, spec.n, spec.seed)?;
    let mut engine = Engine::new(config, spec.algorithm.category(), stations, adversary)
        .with_invariants(spec.algorithm.invariants())
        .with_checks(spec.checks);
    let mut ledger = StageLedger::new(spec.stage_size);
    let mut log = spec.keep_log.then(Vec::new);
    let mut tracked = None;

    let verdict = loop {
        if let StopRule::FixedHorizon(t) = spec.stop {
            if engine.round() >= t {
                break ledger
                    .stabilized()
                    .map_or(Verdict::Undecided, Verdict::Stabilized);
            }
        }
        let record = engine.run_round()?;
        ledger.record_round(&record);
        if let (Some(id), Some(p)) = (spec.track, record.delivered) {
            if p.id == id {
                tracked = Some(record.round);
            }
        }
        if let Some(log) = log.as_mut() {
            log.push(record);
        }
        if let StopRule::StageVerdict {
            max_stages,
            max_rounds,
        } = spec.stop
        {
            if let Some(v) = ledger.stabilized() {
                break Verdict::Stabilized(v);
            }
            if ledger.stage_averages().len() >= max_stages || engine.round() >= max_rounds {
                break Verdict::Unstable;
            }
        }
    };

    Ok(ExecutionReport {
        summary: ledger.summary(verdict),
        injected: engine.injected(),
        delivered: engine.delivered(),
        final_queue: engine.total_queued(),
        max_pending_age: engine.max_pending_age(),
        tracked_delivery: tracked,
        log,
    })
}

impl FromStr for AdversarySpec {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        AdversarySpec::from_name(s)
    }
}
