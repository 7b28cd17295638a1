//! Brute-force interval oracles for the leaky-bucket constraint.
//!
//! These check every contiguous interval directly and never consult the
//! bucket process, so they serve as an independent check of any generator.

use crate::channel::{Round, StationId};
use crate::fixed::{Fixed, SCALE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Admissibility {
    Accept,
    /// The first violating interval `[start, end]` (inclusive), ordered by
    /// start then end. `station` is `None` for the aggregate constraint.
    Reject {
        station: Option<StationId>,
        start: Round,
        end: Round,
    },
}

impl Admissibility {
    pub fn is_accept(&self) -> bool {
        matches!(self, Admissibility::Accept)
    }
}

/// Checks `sum(g[t1..=t2]) <= rho * (t2 - t1 + 1) + beta` for every interval.
pub fn check_admissible(totals: &[u64], rho: Fixed, beta: Fixed) -> Admissibility {
    match first_violation(totals, rho, beta) {
        Some((start, end)) => Admissibility::Reject {
            station: None,
            start,
            end,
        },
        None => Admissibility::Accept,
    }
}

/// Applies the per-station constraint `(rates[i], beta)` to every station's
/// trace and then the aggregate constraint `(sum rates, beta)`.
///
/// `per_station[i][t]` is the number of packets injected into station `i`
/// in round `t`; all traces must have the same length.
pub fn check_admissible_individual(
    per_station: &[Vec<u64>],
    rates: &[Fixed],
    beta: Fixed,
) -> Admissibility {
    assert_eq!(per_station.len(), rates.len(), "one rate per station");
    for (station, (trace, &rate)) in per_station.iter().zip(rates).enumerate() {
        if let Some((start, end)) = first_violation(trace, rate, beta) {
            return Admissibility::Reject {
                station: Some(station),
                start,
                end,
            };
        }
    }
    let len = per_station.iter().map(Vec::len).max().unwrap_or(0);
    let totals: Vec<u64> = (0..len)
        .map(|t| {
            per_station
                .iter()
                .map(|s| s.get(t).copied().unwrap_or(0))
                .sum()
        })
        .collect();
    let rho: Fixed = rates.iter().copied().sum();
    check_admissible(&totals, rho, beta)
}

fn first_violation(totals: &[u64], rho: Fixed, beta: Fixed) -> Option<(Round, Round)> {
    let mut prefix = Vec::with_capacity(totals.len() + 1);
    prefix.push(0u128);
    for &g in totals {
        prefix.push(prefix.last().unwrap() + u128::from(g));
    }
    let (rho, beta) = (u128::from(rho.micros()), u128::from(beta.micros()));
    for start in 0..totals.len() {
        for end in start..totals.len() {
            let sum = (prefix[end + 1] - prefix[start]) * u128::from(SCALE);
            let allowance = rho * (end - start + 1) as u128 + beta;
            if sum > allowance {
                return Some((start as Round, end as Round));
            }
        }
    }
    None
}
