//! Plain-text injection traces, one line per round.
//!
//! Global format: a single non-negative integer (packets generated in the
//! round). Individual format: comma-separated `station:count` pairs such as
//! `0:2,3:1`. A blank line means nothing was injected.

use super::{Adversary, AdversaryView, InjectionPlan};
use crate::channel::StationId;
use crate::error::{ParseError, Result, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Global,
    Individual,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectionTrace {
    format: TraceFormat,
    rounds: Vec<Vec<(StationId, u64)>>,
}

pub fn parse_trace(text: &str) -> Result<InjectionTrace, ParseError> {
    let mut format = None;
    let mut rounds = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let err = |reason: &str| ParseError::Line {
            line: idx + 1,
            reason: reason.to_string(),
        };
        if line.is_empty() {
            rounds.push(Vec::new());
            continue;
        }
        let this = if line.contains(':') {
            TraceFormat::Individual
        } else {
            TraceFormat::Global
        };
        match format {
            None => format = Some(this),
            Some(f) if f != this => return Err(err("mixes global and individual entries")),
            _ => {}
        }
        let entries = match this {
            TraceFormat::Global => {
                let count: u64 = line
                    .parse()
                    .map_err(|_| err("expected a non-negative integer"))?;
                vec![(0, count)]
            }
            TraceFormat::Individual => line
                .split(',')
                .map(|pair| {
                    let (s, c) = pair
                        .split_once(':')
                        .ok_or_else(|| err("expected station:count"))?;
                    let s: StationId = s.trim().parse().map_err(|_| err("bad station id"))?;
                    let c: u64 = c.trim().parse().map_err(|_| err("bad packet count"))?;
                    Ok((s, c))
                })
                .collect::<Result<Vec<_>, ParseError>>()?,
        };
        rounds.push(entries);
    }
    Ok(InjectionTrace {
        format: format.unwrap_or(TraceFormat::Global),
        rounds,
    })
}

impl InjectionTrace {
    pub fn format(&self) -> TraceFormat {
        self.format
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Packets generated per round.
    pub fn totals(&self) -> Vec<u64> {
        self.rounds
            .iter()
            .map(|r| r.iter().map(|&(_, c)| c).sum())
            .collect()
    }

    /// Packets injected per station per round; stations at or beyond `n`
    /// are an error.
    pub fn per_station(&self, n: usize) -> Result<Vec<Vec<u64>>> {
        let mut out = vec![vec![0u64; self.rounds.len()]; n];
        for (t, entries) in self.rounds.iter().enumerate() {
            for &(s, c) in entries {
                let row = out.get_mut(s).ok_or_else(|| {
                    SimError::InvalidParameter(format!("trace names station {s} but n = {n}"))
                })?;
                row[t] += c;
            }
        }
        Ok(out)
    }

    /// Largest station id mentioned, if any.
    pub fn max_station(&self) -> Option<StationId> {
        self.rounds.iter().flatten().map(|&(s, _)| s).max()
    }

    pub fn plan(&self, round: u64) -> Result<InjectionPlan> {
        self.rounds
            .get(round as usize)
            .map(|entries| InjectionPlan::from_counts(entries.iter().copied()))
            .ok_or(SimError::TraceExhausted {
                round,
                len: self.rounds.len(),
            })
    }
}

/// Replays a trace; global-format lines inject into station 0.
#[derive(Clone, Debug)]
pub struct TraceAdversary {
    trace: InjectionTrace,
}

impl TraceAdversary {
    pub fn new(trace: InjectionTrace) -> Self {
        TraceAdversary { trace }
    }
}

impl Adversary for TraceAdversary {
    fn plan(&mut self, view: &AdversaryView<'_>) -> Result<InjectionPlan> {
        self.trace.plan(view.round)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_formats() {
        let g = parse_trace("3\n\n0\n").unwrap();
        assert_eq!(g.format(), TraceFormat::Global);
        assert_eq!(g.totals(), vec![3, 0, 0]);

        let i = parse_trace("0:2,3:1\n\n1:1").unwrap();
        assert_eq!(i.format(), TraceFormat::Individual);
        assert_eq!(i.totals(), vec![3, 0, 1]);
        assert_eq!(i.per_station(4).unwrap()[3], vec![1, 0, 0]);
        assert!(i.per_station(3).is_err());
    }

    #[test]
    fn malformed_lines_report_position() {
        assert_eq!(
            parse_trace("1\nx\n"),
            Err(ParseError::Line {
                line: 2,
                reason: "expected a non-negative integer".into()
            })
        );
        assert!(parse_trace("0:1\n2\n").is_err());
        assert!(parse_trace("0:-1").is_err());
    }

    #[test]
    fn exhausted_past_end() {
        let t = parse_trace("1\n0\n2\n").unwrap();
        assert!(t.plan(2).is_ok());
        assert_eq!(
            t.plan(4),
            Err(SimError::TraceExhausted { round: 4, len: 3 })
        );
    }
}
