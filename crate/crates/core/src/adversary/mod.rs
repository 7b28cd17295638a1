//! Packet injection under leaky-bucket constraints.
//!
//! Adversaries see the public channel history and the per-station queue
//! sizes. The latter carries no private state: queue sizes follow from the
//! adversary's own injections and the packets heard on the channel.

mod admissibility;
mod bucket;
mod poisson;
mod randomized;
mod strategy;
mod trace;

pub use admissibility::{check_admissible, check_admissible_individual, Admissibility};
pub use bucket::{bucket_step, AdversaryType, Bucket};
pub use poisson::sample_poisson;
pub use randomized::{
    IndividualRates, PoissonProposals, ProposalSource, RandomizedAdversary,
    RandomizedIndividualAdversary, ScriptedProposals,
};
pub use strategy::{Strategy, StrategyKind};
pub use trace::{parse_trace, InjectionTrace, TraceAdversary, TraceFormat};

use crate::channel::{ChannelEvent, Round, StationId};
use crate::error::Result;

/// Injections for one round as `(station, count)` pairs with distinct
/// stations in ascending order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InjectionPlan(Vec<(StationId, u64)>);

impl InjectionPlan {
    pub fn empty() -> Self {
        InjectionPlan(Vec::new())
    }

    /// Builds a plan, merging duplicate stations and dropping zero counts.
    pub fn from_counts(counts: impl IntoIterator<Item = (StationId, u64)>) -> Self {
        let mut entries: Vec<(StationId, u64)> =
            counts.into_iter().filter(|&(_, c)| c > 0).collect();
        entries.sort_unstable_by_key(|&(s, _)| s);
        let mut merged: Vec<(StationId, u64)> = Vec::with_capacity(entries.len());
        for (s, c) in entries {
            match merged.last_mut() {
                Some((last, total)) if *last == s => *total += c,
                _ => merged.push((s, c)),
            }
        }
        InjectionPlan(merged)
    }

    pub fn entries(&self) -> &[(StationId, u64)] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of currently passive stations this plan would activate.
    pub fn activations(&self, queue_lens: &[usize]) -> usize {
        self.0.iter().filter(|&&(s, _)| queue_lens[s] == 0).count()
    }
}

/// Public information available to an adversary when it injects in
/// `round`: the round's channel event and the queue sizes after delivery.
#[derive(Clone, Copy, Debug)]
pub struct AdversaryView<'a> {
    pub round: Round,
    pub event: &'a ChannelEvent,
    pub queue_lens: &'a [usize],
}

impl AdversaryView<'_> {
    pub fn is_passive(&self, station: StationId) -> bool {
        self.queue_lens[station] == 0
    }
}

pub trait Adversary: Send {
    fn plan(&mut self, view: &AdversaryView<'_>) -> Result<InjectionPlan>;
}

/// Never injects anything.
#[derive(Clone, Copy, Debug, Default)]
pub struct Silent;

impl Adversary for Silent {
    fn plan(&mut self, _view: &AdversaryView<'_>) -> Result<InjectionPlan> {
        Ok(InjectionPlan::empty())
    }
}
