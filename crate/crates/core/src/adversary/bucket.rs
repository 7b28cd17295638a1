use crate::error::{Result, SimError};
use crate::fixed::Fixed;

/// Leaky-bucket adversary type `(rho, beta)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AdversaryType {
    pub rho: Fixed,
    pub beta: Fixed,
}

impl AdversaryType {
    pub fn new(rho: Fixed, beta: Fixed) -> Result<Self> {
        if rho.is_zero() || rho > Fixed::ONE {
            return Err(SimError::InvalidParameter(format!(
                "rho must lie in (0, 1], got {rho}"
            )));
        }
        if beta < Fixed::ONE {
            return Err(SimError::InvalidParameter(format!(
                "beta must be at least 1, got {beta}"
            )));
        }
        Ok(AdversaryType { rho, beta })
    }

    /// Maximum number of packets in a single round, `floor(rho + beta)`.
    pub fn burstiness(&self) -> u64 {
        (self.rho + self.beta).floor()
    }
}

/// One round of the four-step bucket process.
///
/// Leaks `rho` into the bucket (capped at `beta`), grants
/// `j = min(floor(level), proposed)` and debits the grant. Returns
/// `(j, new_level)`.
pub fn bucket_step(level: Fixed, rho: Fixed, beta: Fixed, proposed: u64) -> (u64, Fixed) {
    let filled = (level + rho).min(beta);
    let granted = filled.floor().min(proposed);
    (granted, filled - Fixed::from_int(granted))
}

/// A bucket initialised full, as at round zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bucket {
    level: Fixed,
    rho: Fixed,
    beta: Fixed,
}

impl Bucket {
    pub fn new(rho: Fixed, beta: Fixed) -> Self {
        Bucket {
            level: beta,
            rho,
            beta,
        }
    }

    pub fn for_type(ty: AdversaryType) -> Self {
        Bucket::new(ty.rho, ty.beta)
    }

    pub fn level(&self) -> Fixed {
        self.level
    }

    /// Full four-step round: leak, cap the proposal, debit.
    pub fn step(&mut self, proposed: u64) -> u64 {
        let (j, level) = bucket_step(self.level, self.rho, self.beta, proposed);
        self.level = level;
        j
    }

    /// Split form of [`Bucket::step`] for callers that need the post-leak
    /// capacity before deciding how much to take.
    pub fn leak(&mut self) -> u64 {
        self.level = (self.level + self.rho).min(self.beta);
        self.level.floor()
    }

    pub fn capacity(&self) -> u64 {
        self.level.floor()
    }

    /// Debits `count` packets after [`Bucket::leak`].
    pub fn take(&mut self, count: u64) {
        assert!(count <= self.level.floor(), "bucket overdraft");
        self.level = self.level - Fixed::from_int(count);
    }
}
