use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nondegenerate real interval, possibly unbounded on either side.
///
/// Infinite ends are always treated as open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi, lo_open: lo_open || lo.is_infinite(), hi_open: hi_open || hi.is_infinite() })
    }

    /// The whole real line.
    pub fn real_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY, true, true).unwrap()
    }

    /// `(0, inf)`.
    pub fn positive() -> Self {
        Self::new(0.0, f64::INFINITY, true, true).unwrap()
    }

    /// `(lo, hi)`. Panics on degenerate bounds.
    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, true).expect("nondegenerate interval")
    }

    /// `[lo, hi]`. Panics on degenerate bounds.
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, false).expect("nondegenerate interval")
    }

    /// `[lo, inf)`.
    pub fn closed_open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, true).expect("nondegenerate interval")
    }

    pub fn contains(&self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }

    /// Strict interior membership.
    pub fn contains_interior(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Intersection, or `None` when it is empty or a single point.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, lo_open) = match self.lo.partial_cmp(&other.lo)? {
            std::cmp::Ordering::Greater => (self.lo, self.lo_open),
            std::cmp::Ordering::Less => (other.lo, other.lo_open),
            std::cmp::Ordering::Equal => (self.lo, self.lo_open || other.lo_open),
        };
        let (hi, hi_open) = match self.hi.partial_cmp(&other.hi)? {
            std::cmp::Ordering::Less => (self.hi, self.hi_open),
            std::cmp::Ordering::Greater => (other.hi, other.hi_open),
            std::cmp::Ordering::Equal => (self.hi, self.hi_open || other.hi_open),
        };
        Interval::new(lo, hi, lo_open, hi_open).ok()
    }

    /// A bounded sub-window used for grids: unbounded ends are replaced by a
    /// finite stand-in twenty units away from the other end (or `[-10, 10]`).
    pub fn finite_window(&self) -> (f64, f64) {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => (self.lo, self.hi),
            (true, false) => (self.lo, self.lo + 20.0_f64.max(self.lo.abs())),
            (false, true) => (self.hi - 20.0_f64.max(self.hi.abs()), self.hi),
            (false, false) => (-10.0, 10.0),
        }
    }

    /// `n` Chebyshev points of the first kind on [`Self::finite_window`],
    /// in increasing order. They never touch the window ends.
    pub fn chebyshev_grid(&self, n: usize) -> Vec<f64> {
        let (a, b) = self.finite_window();
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        (0..n)
            .rev()
            .map(|k| {
                let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64;
                mid + half * theta.cos()
            })
            .collect()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}
