//! Exact decimal quantities with six fractional digits.
//!
//! Injection rates and burstiness are carried as integer micro-units so that
//! the bucket process and the interval oracle agree bit-for-bit at the
//! boundary `sum == rho * |tau| + beta`.

use std::fmt;
use std::str::FromStr;

use crate::error::ParseError;

/// Number of micro-units in one whole unit.
pub const SCALE: u64 = 1_000_000;

/// A non-negative decimal with exactly six fractional digits of precision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed(u64);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);
    pub const ONE: Fixed = Fixed(SCALE);

    pub const fn from_micros(micros: u64) -> Self {
        Fixed(micros)
    }

    pub const fn from_int(value: u64) -> Self {
        Fixed(value * SCALE)
    }

    pub const fn micros(self) -> u64 {
        self.0
    }

    /// Largest integer not exceeding the value.
    pub const fn floor(self) -> u64 {
        self.0 / SCALE
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    /// Nearest representable value; negative inputs clamp to zero.
    pub fn from_f64(value: f64) -> Self {
        Fixed((value.max(0.0) * SCALE as f64).round() as u64)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Splits the value into `parts` shares that differ by at most one
    /// micro-unit and sum exactly to the original; lower indices get the
    /// larger shares.
    pub fn split_even(self, parts: usize) -> Vec<Fixed> {
        assert!(parts > 0, "cannot split into zero parts");
        let base = self.0 / parts as u64;
        let extra = (self.0 % parts as u64) as usize;
        (0..parts)
            .map(|i| Fixed(base + u64::from(i < extra)))
            .collect()
    }
}

impl std::ops::Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Fixed {
    fn sum<I: Iterator<Item = Fixed>>(iter: I) -> Fixed {
        Fixed(iter.map(|f| f.0).sum())
    }
}

impl FromStr for Fixed {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseError::Decimal(s.to_string());
        let s = s.trim();
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if frac.len() > 6
            || !whole
                .bytes()
                .chain(frac.bytes())
                .all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let whole: u64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let mut frac_micros = 0u64;
        for (i, b) in frac.bytes().enumerate() {
            frac_micros += u64::from(b - b'0') * 10u64.pow(5 - i as u32);
        }
        whole
            .checked_mul(SCALE)
            .and_then(|w| w.checked_add(frac_micros))
            .map(Fixed)
            .ok_or_else(bad)
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / SCALE, self.0 % SCALE)
    }
}
