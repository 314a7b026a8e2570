//! Simulated time.
//!
//! All latencies, block timestamps, and contract expiries run on a simulated
//! millisecond clock so hour-scale experiments replay in milliseconds of wall
//! time and produce byte-identical traces.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// A point on the simulated clock, in milliseconds since scenario start.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize, Debug,
)]
pub struct SimTime(u64);

pub const MILLIS_PER_MINUTE: u64 = 60_000;

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_millis(ms: u64) -> SimTime {
        SimTime(ms)
    }

    /// Rounds to the nearest millisecond.
    pub fn from_minutes(minutes: f64) -> SimTime {
        SimTime((minutes * MILLIS_PER_MINUTE as f64).round() as u64)
    }

    pub const fn millis(self) -> u64 {
        self.0
    }

    pub fn minutes(self) -> f64 {
        self.0 as f64 / MILLIS_PER_MINUTE as f64
    }

    pub fn saturating_sub(self, other: SimTime) -> u64 {
        self.0.saturating_sub(other.0)
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, ms: u64) -> SimTime {
        SimTime(self.0 + ms)
    }
}

impl AddAssign<u64> for SimTime {
    fn add_assign(&mut self, ms: u64) {
        self.0 += ms;
    }
}

impl Sub<SimTime> for SimTime {
    type Output = u64;
    fn sub(self, other: SimTime) -> u64 {
        self.0 - other.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}
