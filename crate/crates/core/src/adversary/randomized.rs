use rand::seq::SliceRandom;
use rand::Rng;

use super::bucket::{AdversaryType, Bucket};
use super::poisson::sample_poisson;
use super::{Adversary, AdversaryView, InjectionPlan};
use crate::channel::StationId;
use crate::error::{Result, SimError};
use crate::fixed::Fixed;
use crate::rng::SimRng;

/// Source of the proposed count `X` in the bucket process.
pub trait ProposalSource: Send {
    fn propose(&mut self, rng: &mut SimRng, rate: Fixed) -> Result<u64>;
}

/// `X ~ Poisson(rate)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PoissonProposals;

impl ProposalSource for PoissonProposals {
    fn propose(&mut self, rng: &mut SimRng, rate: Fixed) -> Result<u64> {
        sample_poisson(rng, rate.to_f64())
    }
}

/// Replays a fixed sequence of proposals, then proposes zero forever.
#[derive(Clone, Debug, Default)]
pub struct ScriptedProposals {
    values: Vec<u64>,
    next: usize,
}

impl ScriptedProposals {
    pub fn new(values: Vec<u64>) -> Self {
        ScriptedProposals { values, next: 0 }
    }
}

impl ProposalSource for ScriptedProposals {
    fn propose(&mut self, _rng: &mut SimRng, _rate: Fixed) -> Result<u64> {
        let x = self.values.get(self.next).copied().unwrap_or(0);
        self.next += 1;
        Ok(x)
    }
}

/// Randomized leaky-bucket adversary with virtually-active station
/// selection.
///
/// Each round: draw `X`, run the bucket step to obtain `j`; if `j > 0`, pick
/// one passive station uniformly at random as virtually active and assign
/// each packet independently and uniformly over the active stations plus
/// the virtually active one.
pub struct RandomizedAdversary<P = PoissonProposals> {
    ty: AdversaryType,
    bucket: Bucket,
    rng: SimRng,
    proposals: P,
    eligible: Vec<StationId>,
}

impl RandomizedAdversary<PoissonProposals> {
    pub fn new(ty: AdversaryType, rng: SimRng) -> Self {
        RandomizedAdversary::with_proposals(ty, rng, PoissonProposals)
    }
}

impl<P: ProposalSource> RandomizedAdversary<P> {
    pub fn with_proposals(ty: AdversaryType, rng: SimRng, proposals: P) -> Self {
        RandomizedAdversary {
            ty,
            bucket: Bucket::for_type(ty),
            rng,
            proposals,
            eligible: Vec::new(),
        }
    }

    pub fn bucket_level(&self) -> Fixed {
        self.bucket.level()
    }
}

impl<P: ProposalSource> Adversary for RandomizedAdversary<P> {
    fn plan(&mut self, view: &AdversaryView<'_>) -> Result<InjectionPlan> {
        let proposed = self.proposals.propose(&mut self.rng, self.ty.rho)?;
        let generated = self.bucket.step(proposed);
        if generated == 0 {
            return Ok(InjectionPlan::empty());
        }
        self.eligible.clear();
        let mut passive_count = 0usize;
        for (s, &len) in view.queue_lens.iter().enumerate() {
            if len > 0 {
                self.eligible.push(s);
            } else {
                passive_count += 1;
            }
        }
        if passive_count > 0 {
            let pick = self.rng.gen_range(0..passive_count);
            let virtual_station = view
                .queue_lens
                .iter()
                .enumerate()
                .filter(|&(_, &len)| len == 0)
                .nth(pick)
                .map(|(s, _)| s)
                .expect("pick is below the passive count");
            self.eligible.push(virtual_station);
        }
        let eligible = &self.eligible;
        let rng = &mut self.rng;
        let plan = InjectionPlan::from_counts(
            (0..generated).map(|_| (eligible[rng.gen_range(0..eligible.len())], 1)),
        );
        Ok(plan)
    }
}

/// Per-station injection rates summing exactly to the aggregate rate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndividualRates(Vec<Fixed>);

impl IndividualRates {
    pub fn new(rates: Vec<Fixed>, rho: Fixed) -> Result<Self> {
        if rates.iter().any(|&r| r > Fixed::ONE) {
            return Err(SimError::InvalidParameter(
                "individual rates must lie in [0, 1]".into(),
            ));
        }
        let sum: Fixed = rates.iter().copied().sum();
        if sum != rho {
            return Err(SimError::InvalidParameter(format!(
                "individual rates sum to {sum}, expected {rho}"
            )));
        }
        Ok(IndividualRates(rates))
    }

    /// `rho / n` per station, with the rounding remainder spread over the
    /// lowest ids.
    pub fn uniform(rho: Fixed, n: usize) -> Self {
        IndividualRates(rho.split_even(n))
    }

    pub fn rates(&self) -> &[Fixed] {
        &self.0
    }

    pub fn total(&self) -> Fixed {
        self.0.iter().copied().sum()
    }
}

/// Randomized adversary honouring individual rates.
///
/// Every station has its own bucket `(rho_i, beta)` next to the aggregate
/// bucket `(rho, beta)`. Station `i` receives
/// `min(X_i, floor(D_i), remaining aggregate capacity)` with
/// `X_i ~ Poisson(rho_i)`, visiting stations in a fresh random order each
/// round. Only the first passive station in that order may be activated;
/// the draws of other passive stations carry over to the next round.
pub struct RandomizedIndividualAdversary {
    rates: IndividualRates,
    global: Bucket,
    stations: Vec<Bucket>,
    carried: Vec<u64>,
    order: Vec<StationId>,
    rng: SimRng,
}

impl RandomizedIndividualAdversary {
    pub fn new(ty: AdversaryType, rates: IndividualRates, rng: SimRng) -> Result<Self> {
        if rates.total() != ty.rho {
            return Err(SimError::InvalidParameter(
                "individual rates must sum to rho".into(),
            ));
        }
        let stations = rates
            .rates()
            .iter()
            .map(|&r| Bucket::new(r, ty.beta))
            .collect();
        let n = rates.rates().len();
        Ok(RandomizedIndividualAdversary {
            rates,
            global: Bucket::for_type(ty),
            stations,
            carried: vec![0; n],
            order: (0..n).collect(),
            rng,
        })
    }
}

impl Adversary for RandomizedIndividualAdversary {
    fn plan(&mut self, view: &AdversaryView<'_>) -> Result<InjectionPlan> {
        let mut remaining = self.global.leak();
        for b in &mut self.stations {
            b.leak();
        }
        let mut draws = self.carried.clone();
        for (i, &rate) in self.rates.rates().iter().enumerate() {
            if !rate.is_zero() {
                draws[i] += sample_poisson(&mut self.rng, rate.to_f64())?;
            }
        }
        self.order.shuffle(&mut self.rng);

        let mut activated = false;
        let mut grants = Vec::new();
        for &i in &self.order {
            self.carried[i] = 0;
            let grant = draws[i].min(self.stations[i].capacity()).min(remaining);
            if grant == 0 {
                continue;
            }
            if view.is_passive(i) {
                if activated {
                    self.carried[i] = draws[i];
                    continue;
                }
                activated = true;
            }
            self.stations[i].take(grant);
            remaining -= grant;
            grants.push((i, grant));
        }
        let total: u64 = grants.iter().map(|&(_, c)| c).sum();
        self.global.take(total);
        Ok(InjectionPlan::from_counts(grants))
    }
}
