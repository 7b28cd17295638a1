//! Delay and queue statistics, and the marked-packet stage protocol.
//!
//! A stage marks `K` consecutively generated packets and closes when all of
//! them have been delivered; its measurement is their mean delay. Marking of
//! the next batch starts with the first packet generated after the closing
//! round. The run has stabilized once four consecutive stages pairwise
//! differ by less than 5%, relative to the smaller of the two.

use crate::channel::{PacketId, Round};
use crate::engine::RoundRecord;

pub const DEFAULT_STAGE_SIZE: u64 = 5_000;
pub const DEFAULT_MAX_STAGES: usize = 200;
pub const DEFAULT_MAX_ROUNDS: u64 = 10_000_000;
/// Consecutive stages compared by the stabilization rule.
pub const WINDOW: usize = 4;
/// Largest relative gap (exclusive) between stages of a stable window.
pub const TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    Stabilized(f64),
    Undecided,
    Unstable,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Stabilized(_) => "stabilized",
            Verdict::Undecided => "undecided",
            Verdict::Unstable => "unstable",
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Verdict::Stabilized(v) => Some(*v),
            _ => None,
        }
    }
}

/// Mean of the first window of four consecutive stages whose pairwise
/// relative differences are all below 5%.
pub fn detect_stabilization(averages: &[f64]) -> Option<f64> {
    averages
        .windows(WINDOW)
        .find(|w| window_is_stable(w))
        .map(|w| w.iter().sum::<f64>() / WINDOW as f64)
}

fn window_is_stable(w: &[f64]) -> bool {
    w.iter().enumerate().all(|(i, &a)| {
        w[i + 1..].iter().all(|&b| {
            let lo = a.min(b);
            lo > 0.0 && (a - b).abs() / lo < TOLERANCE
        })
    })
}

#[derive(Clone, Debug)]
pub struct StageLedger {
    stage_size: u64,
    /// First id of the open batch, once its first packet was generated.
    batch_start: Option<PacketId>,
    marked: u64,
    outstanding: u64,
    delay_sum: u128,
    averages: Vec<f64>,
    closed_at: Vec<Round>,
    stabilized: Option<f64>,
    max_delay: u64,
    max_delay_round: Round,
    max_queue: u64,
    max_queue_round: Round,
    rounds: u64,
}

impl StageLedger {
    pub fn new(stage_size: u64) -> Self {
        assert!(stage_size > 0, "stage size must be positive");
        StageLedger {
            stage_size,
            batch_start: None,
            marked: 0,
            outstanding: 0,
            delay_sum: 0,
            averages: Vec::new(),
            closed_at: Vec::new(),
            stabilized: None,
            max_delay: 0,
            max_delay_round: 0,
            max_queue: 0,
            max_queue_round: 0,
            rounds: 0,
        }
    }

    fn is_marked(&self, id: PacketId) -> bool {
        self.batch_start
            .is_some_and(|s| id >= s && id < s + self.marked)
    }

    pub fn record_round(&mut self, record: &RoundRecord) {
        self.rounds = record.round + 1;
        if let Some(p) = record.delivered {
            let delay = p.delay().expect("delivered packets carry a delivery round");
            if delay > self.max_delay {
                self.max_delay = delay;
                self.max_delay_round = record.round;
            }
            if self.is_marked(p.id) {
                self.outstanding -= 1;
                self.delay_sum += delay as u128;
                if self.outstanding == 0 && self.marked == self.stage_size {
                    self.close_stage(record.round);
                }
            }
        }
        for &(_, id) in &record.injections {
            if self.marked < self.stage_size {
                self.batch_start.get_or_insert(id);
                self.marked += 1;
                self.outstanding += 1;
            }
        }
        if record.total_queued > self.max_queue {
            self.max_queue = record.total_queued;
            self.max_queue_round = record.round;
        }
    }

    fn close_stage(&mut self, round: Round) {
        self.averages
            .push(self.delay_sum as f64 / self.stage_size as f64);
        self.closed_at.push(round);
        self.batch_start = None;
        self.marked = 0;
        self.delay_sum = 0;
        if self.stabilized.is_none() && self.averages.len() >= WINDOW {
            let tail = &self.averages[self.averages.len() - WINDOW..];
            if window_is_stable(tail) {
                self.stabilized = Some(tail.iter().sum::<f64>() / WINDOW as f64);
            }
        }
    }

    pub fn stage_averages(&self) -> &[f64] {
        &self.averages
    }

    /// Rounds in which each stage closed.
    pub fn stage_closures(&self) -> &[Round] {
        &self.closed_at
    }

    pub fn stabilized(&self) -> Option<f64> {
        self.stabilized
    }

    pub fn summary(&self, verdict: Verdict) -> MetricsSummary {
        MetricsSummary {
            stage_averages: self.averages.clone(),
            stage_closures: self.closed_at.clone(),
            verdict,
            max_delay: self.max_delay,
            max_delay_round: self.max_delay_round,
            max_queue: self.max_queue,
            max_queue_round: self.max_queue_round,
            rounds: self.rounds,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsSummary {
    pub stage_averages: Vec<f64>,
    pub stage_closures: Vec<Round>,
    pub verdict: Verdict,
    pub max_delay: u64,
    pub max_delay_round: Round,
    pub max_queue: u64,
    pub max_queue_round: Round,
    pub rounds: u64,
}

impl MetricsSummary {
    pub fn stages(&self) -> usize {
        self.stage_averages.len()
    }
}
