//! Scripted worst-case injection patterns.
//!
//! Each strategy follows the injection pattern used to argue the matching
//! upper bound and spends only what its buckets allow, so every emitted
//! trace is admissible for the declared type and 1-activating.

use std::collections::VecDeque;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::bucket::{AdversaryType, Bucket};
use super::randomized::IndividualRates;
use super::trace::InjectionTrace;
use super::{Adversary, AdversaryView, InjectionPlan};
use crate::channel::StationId;
use crate::error::{ParseError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StrategyKind {
    RrwSaturator,
    SrrSaturator,
    QuadrupleSaturator,
    QueueBackoffDelayer,
    CountingStarver,
    Trace(PathBuf),
}

impl StrategyKind {
    pub const NAMED: [StrategyKind; 5] = [
        StrategyKind::RrwSaturator,
        StrategyKind::SrrSaturator,
        StrategyKind::QuadrupleSaturator,
        StrategyKind::QueueBackoffDelayer,
        StrategyKind::CountingStarver,
    ];

    /// Whether the pattern respects per-station rates `rho / n`.
    pub fn uses_individual_rates(&self) -> bool {
        matches!(
            self,
            StrategyKind::RrwSaturator | StrategyKind::SrrSaturator
        )
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::RrwSaturator => f.write_str("rrw-saturator"),
            StrategyKind::SrrSaturator => f.write_str("srr-saturator"),
            StrategyKind::QuadrupleSaturator => f.write_str("quadruple-saturator"),
            StrategyKind::QueueBackoffDelayer => f.write_str("queue-backoff-delayer"),
            StrategyKind::CountingStarver => f.write_str("counting-starver"),
            StrategyKind::Trace(p) => write!(f, "trace:{}", p.display()),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        if let Some(path) = s.strip_prefix("trace:") {
            return Ok(StrategyKind::Trace(PathBuf::from(path)));
        }
        StrategyKind::NAMED
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| ParseError::Adversary(s.to_string()))
    }
}

/// A running scripted adversary.
pub struct Strategy {
    global: Bucket,
    pattern: Pattern,
}

enum Pattern {
    Saturate { stations: Vec<Bucket> },
    Quadruple { recent: VecDeque<StationId> },
    Delay(Delayer),
    Starve,
    Trace(InjectionTrace),
}

struct Delayer {
    n: usize,
    warmup: u64,
    /// Stations in the order they joined the distributed queue.
    order: VecDeque<StationId>,
    dedicated: Option<StationId>,
}

impl Strategy {
    /// Builds a named strategy. Trace strategies take their trace through
    /// [`Strategy::from_trace`].
    pub fn new(kind: &StrategyKind, ty: AdversaryType, n: usize) -> Self {
        let pattern = match kind {
            StrategyKind::RrwSaturator | StrategyKind::SrrSaturator => {
                let rates = IndividualRates::uniform(ty.rho, n);
                Pattern::Saturate {
                    stations: rates
                        .rates()
                        .iter()
                        .map(|&r| Bucket::new(r, ty.beta))
                        .collect(),
                }
            }
            StrategyKind::QuadrupleSaturator => Pattern::Quadruple {
                recent: VecDeque::new(),
            },
            StrategyKind::QueueBackoffDelayer => {
                let rho = ty.rho.to_f64();
                let warmup =
                    ((4.0 * n as f64 + ty.beta.to_f64()) / (1.0 - rho).max(0.01)).ceil() as u64;
                Pattern::Delay(Delayer {
                    n,
                    warmup,
                    order: VecDeque::new(),
                    dedicated: None,
                })
            }
            StrategyKind::CountingStarver => Pattern::Starve,
            StrategyKind::Trace(path) => panic!(
                "trace strategy {} needs Strategy::from_trace",
                path.display()
            ),
        };
        Strategy {
            global: Bucket::for_type(ty),
            pattern,
        }
    }

    pub fn from_trace(trace: InjectionTrace, ty: AdversaryType) -> Self {
        Strategy {
            global: Bucket::for_type(ty),
            pattern: Pattern::Trace(trace),
        }
    }

    /// Station whose head packet a starving strategy keeps at the bottom.
    pub fn victim_station(&self) -> Option<StationId> {
        matches!(self.pattern, Pattern::Starve).then_some(0)
    }

    /// Station holding the current dedicated packet of the delaying strategy.
    pub fn dedicated_station(&self) -> Option<StationId> {
        match &self.pattern {
            Pattern::Delay(d) => d.dedicated,
            _ => None,
        }
    }
}

fn lowest_passive(view: &AdversaryView<'_>) -> Option<StationId> {
    view.queue_lens.iter().position(|&len| len == 0)
}

impl Adversary for Strategy {
    fn plan(&mut self, view: &AdversaryView<'_>) -> Result<InjectionPlan> {
        if let Pattern::Trace(trace) = &self.pattern {
            return trace.plan(view.round);
        }
        let mut cap = self.global.leak();
        let mut grants: Vec<(StationId, u64)> = Vec::new();
        match &mut self.pattern {
            Pattern::Saturate { stations } => {
                let mut activated = false;
                for (s, bucket) in stations.iter_mut().enumerate() {
                    let grant = bucket.leak().min(cap);
                    if grant == 0 || (view.is_passive(s) && activated) {
                        continue;
                    }
                    activated |= view.is_passive(s);
                    bucket.take(grant);
                    cap -= grant;
                    grants.push((s, grant));
                }
            }
            Pattern::Quadruple { recent } => {
                recent.retain(|&s| !view.is_passive(s));
                let slot = view.round % 8;
                let passive = lowest_passive(view);
                if let (true, Some(s)) = (slot < 3 && cap >= 1, passive) {
                    grants.push((s, 1));
                    recent.push_back(s);
                    while recent.len() > 3 {
                        recent.pop_front();
                    }
                } else if recent.len() == 3 && cap >= 3 {
                    grants.extend(recent.iter().map(|&s| (s, 1)));
                } else if let (Some(s), true) = (passive, cap >= 1) {
                    grants.push((s, 1));
                    recent.push_back(s);
                    while recent.len() > 3 {
                        recent.pop_front();
                    }
                }
            }
            Pattern::Delay(d) => d.plan(view, cap, &mut grants),
            Pattern::Starve => {
                if view.round == 0 {
                    grants.push((0, cap.min(2)));
                } else if let (Some(s), true) = (lowest_passive(view), cap >= 1) {
                    grants.push((s, 1));
                }
            }
            Pattern::Trace(_) => unreachable!(),
        }
        let plan = InjectionPlan::from_counts(grants);
        self.global.take(plan.total());
        Ok(plan)
    }
}

impl Delayer {
    fn plan(&mut self, view: &AdversaryView<'_>, cap: u64, grants: &mut Vec<(StationId, u64)>) {
        self.order.retain(|&s| !view.is_passive(s));
        if let Some(d) = self.dedicated {
            if view.is_passive(d) {
                // dedicated packet delivered; start building up again
                self.dedicated = None;
            }
        }
        if cap == 0 {
            return;
        }
        match self.dedicated {
            Some(d) => {
                // feed only stations ahead of the dedicated one
                let ahead = self.order.iter().take_while(|&&s| s != d).last().copied();
                if let Some(s) = ahead {
                    grants.push((s, cap));
                }
            }
            None => {
                let passive = lowest_passive(view);
                let built_up = self.order.len() + 1 >= self.n || view.round >= self.warmup;
                match passive {
                    Some(s) if built_up && !self.order.is_empty() => {
                        self.dedicated = Some(s);
                        self.order.push_back(s);
                        grants.push((s, 1));
                    }
                    Some(s) => {
                        self.order.push_back(s);
                        grants.push((s, cap));
                    }
                    None => {
                        if let Some(&last) = self.order.back() {
                            grants.push((last, cap));
                        }
                    }
                }
            }
        }
    }
}
